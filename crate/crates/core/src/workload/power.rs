use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::ComponentWatts;

pub const POWERCAP_ROOT: &str = "/sys/class/powercap";

/// Something that reports average component power over an interval.
pub trait PowerSource {
    fn start(&mut self) -> Result<()>;
    /// Average watts since the matching [`start`](PowerSource::start).
    fn stop(&mut self) -> Result<ComponentWatts>;
}

/// Energy consumed between two counter readings, allowing one wraparound at `max_range`.
pub fn energy_delta_uj(before: u64, after: u64, max_range: u64) -> u64 {
    if after >= before {
        after - before
    } else {
        max_range - before + after
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Component {
    Package,
    Memory,
    Uncore,
}

#[derive(Debug, Clone)]
struct Domain {
    component: Component,
    energy: PathBuf,
    max_range: u64,
}

fn read_u64(path: &Path) -> Result<u64> {
    let text = fs::read_to_string(path)?;
    text.trim()
        .parse()
        .map_err(|_| Error::NotAvailable(format!("unreadable counter {}", path.display())))
}

/// Energy counters exposed by Linux powercap.
///
/// Package domains feed the CPU component, `dram` domains the memory component and
/// `uncore` domains the uncore component. Uncore energy is part of the package counter,
/// so it is subtracted from the CPU figure when both are present.
#[derive(Debug, Clone)]
pub struct RaplReader {
    domains: Vec<Domain>,
    start: Option<(Instant, Vec<u64>)>,
}

impl RaplReader {
    pub fn open() -> Result<Self> {
        Self::open_at(Path::new(POWERCAP_ROOT))
    }

    /// Discovers `intel-rapl:*` domains under `root`.
    pub fn open_at(root: &Path) -> Result<Self> {
        let entries = fs::read_dir(root)
            .map_err(|e| Error::NotAvailable(format!("{}: {e}", root.display())))?;
        let mut domains = Vec::new();
        let mut names: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("intel-rapl:"))
            })
            .collect();
        names.sort();
        for dir in names {
            let name = fs::read_to_string(dir.join("name")).unwrap_or_default();
            let name = name.trim();
            let component = if name.starts_with("package") {
                Component::Package
            } else if name == "dram" {
                Component::Memory
            } else if name == "uncore" {
                Component::Uncore
            } else {
                continue;
            };
            let energy = dir.join("energy_uj");
            if read_u64(&energy).is_err() {
                continue;
            }
            let max_range = read_u64(&dir.join("max_energy_range_uj")).unwrap_or(u64::MAX);
            domains.push(Domain { component, energy, max_range });
        }
        if !domains.iter().any(|d| d.component == Component::Package) {
            return Err(Error::NotAvailable(format!(
                "no readable RAPL package counters under {}",
                root.display()
            )));
        }
        Ok(RaplReader { domains, start: None })
    }

    fn read_all(&self) -> Result<Vec<u64>> {
        self.domains.iter().map(|d| read_u64(&d.energy)).collect()
    }

    pub fn has_memory(&self) -> bool {
        self.domains.iter().any(|d| d.component == Component::Memory)
    }
}

impl PowerSource for RaplReader {
    fn start(&mut self) -> Result<()> {
        self.start = Some((Instant::now(), self.read_all()?));
        Ok(())
    }

    fn stop(&mut self) -> Result<ComponentWatts> {
        let (t0, before) =
            self.start.take().ok_or_else(|| Error::Benchmark("power reader not started".into()))?;
        let after = self.read_all()?;
        let secs = t0.elapsed().as_secs_f64();
        if secs <= 0.0 {
            return Err(Error::Benchmark("empty power window".into()));
        }
        let mut w = ComponentWatts::default();
        for (d, (b, a)) in self.domains.iter().zip(before.iter().zip(&after)) {
            let watts = energy_delta_uj(*b, *a, d.max_range) as f64 * 1e-6 / secs;
            match d.component {
                Component::Package => w.cpu += watts,
                Component::Memory => w.memory += watts,
                Component::Uncore => w.uncore += watts,
            }
        }
        w.cpu -= w.uncore;
        Ok(w)
    }
}

/// Replays power samples from a CSV file with columns `cpu,memory,uncore` (watts). The
/// reported power is the mean of all rows.
#[derive(Debug, Clone)]
pub struct FilePowerSource {
    mean: ComponentWatts,
}

#[derive(Deserialize)]
struct SampleRow {
    cpu: f64,
    memory: f64,
    #[serde(default)]
    uncore: f64,
}

impl FilePowerSource {
    pub fn open(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut sum = ComponentWatts::default();
        let mut count = 0usize;
        for row in reader.deserialize() {
            let r: SampleRow = row?;
            sum = sum + ComponentWatts { cpu: r.cpu, memory: r.memory, uncore: r.uncore };
            count += 1;
        }
        if count == 0 {
            return Err(Error::Argument(format!("no power samples in {}", path.display())));
        }
        Ok(FilePowerSource { mean: sum * (1.0 / count as f64) })
    }
}

impl PowerSource for FilePowerSource {
    fn start(&mut self) -> Result<()> {
        Ok(())
    }

    fn stop(&mut self) -> Result<ComponentWatts> {
        Ok(self.mean)
    }
}

/// Average RAPL power over `window`.
pub fn read_power(window: Duration) -> Result<ComponentWatts> {
    let mut r = RaplReader::open()?;
    r.start()?;
    thread::sleep(window);
    r.stop()
}
