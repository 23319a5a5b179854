use std::fs;

/// Logical CPUs usable by this process, one per physical core, ordered by socket then core.
pub fn physical_core_order() -> Vec<usize> {
    let allowed = allowed_cpus();
    let mut seen = std::collections::BTreeMap::new();
    for cpu in allowed {
        let read = |leaf: &str| -> Option<i64> {
            fs::read_to_string(format!("/sys/devices/system/cpu/cpu{cpu}/topology/{leaf}"))
                .ok()?
                .trim()
                .parse()
                .ok()
        };
        let package = read("physical_package_id").unwrap_or(0);
        let core = read("core_id").unwrap_or(cpu as i64);
        seen.entry((package, core)).or_insert(cpu);
    }
    seen.into_values().collect()
}

#[cfg(target_os = "linux")]
fn allowed_cpus() -> Vec<usize> {
    // SAFETY: cpu_set_t is plain data and the call only writes into it.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        if libc::sched_getaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &mut set) != 0 {
            return (0..available()).collect();
        }
        (0..libc::CPU_SETSIZE as usize).filter(|&c| libc::CPU_ISSET(c, &set)).collect()
    }
}

#[cfg(not(target_os = "linux"))]
fn allowed_cpus() -> Vec<usize> {
    (0..available()).collect()
}

fn available() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Pins the calling thread to `cpu`.
#[cfg(target_os = "linux")]
pub fn pin_current(cpu: usize) -> bool {
    // SAFETY: see above.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current(_cpu: usize) -> bool {
    false
}

/// Whether `QWB_NO_PIN=1` is set.
pub fn pinning_disabled_by_env() -> bool {
    std::env::var("QWB_NO_PIN").is_ok_and(|v| v.trim() == "1")
}

/// CPU for each of `n` enqueuer/dequeuer pairs: enqueuer `i` on core `2i`, dequeuer `i`
/// on core `2i + 1`, following [`physical_core_order`]. `None` if there are too few cores.
pub fn pair_layout(n: usize, cores: &[usize]) -> Option<Vec<(usize, usize)>> {
    if cores.len() < 2 * n {
        return None;
    }
    Some((0..n).map(|i| (cores[2 * i], cores[2 * i + 1])).collect())
}
