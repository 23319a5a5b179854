//! Power side of the model: static + activation + dynamic power per component, with the
//! dynamic part derived from the retry-loop ratios of the throughput model.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::throughput::ratio;

/// Watts per component. The same shape carries dynamic parts, measured samples and totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentWatts {
    pub cpu: f64,
    pub memory: f64,
    pub uncore: f64,
}

impl ComponentWatts {
    pub fn total(&self) -> f64 {
        self.cpu + self.memory + self.uncore
    }

    pub fn map(self, mut op: impl FnMut(f64) -> f64) -> Self {
        ComponentWatts { cpu: op(self.cpu), memory: op(self.memory), uncore: op(self.uncore) }
    }
}

impl Add for ComponentWatts {
    type Output = ComponentWatts;

    fn add(self, rhs: Self) -> Self {
        ComponentWatts {
            cpu: self.cpu + rhs.cpu,
            memory: self.memory + rhs.memory,
            uncore: self.uncore + rhs.uncore,
        }
    }
}

impl Mul<f64> for ComponentWatts {
    type Output = ComponentWatts;

    fn mul(self, rhs: f64) -> Self {
        self.map(|w| w * rhs)
    }
}

/// Platform-level costs of one component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentPlatform {
    pub static_w: f64,
    pub act_socket_w: f64,
    pub act_core_w: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlatformComponents {
    pub cpu: ComponentPlatform,
    pub memory: ComponentPlatform,
    #[serde(default)]
    pub uncore: ComponentPlatform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub sockets: u32,
    pub cores_per_socket: u32,
}

/// Static and activation powers of the machine, plus its topology and λ.
///
/// Loaded from the platform JSON file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformPowers {
    pub components: PlatformComponents,
    pub topology: Topology,
    pub lambda_seconds: f64,
}

impl PlatformPowers {
    /// A platform with no static or activation cost: totals equal dynamic power.
    pub fn zero(topology: Topology) -> Self {
        PlatformPowers {
            components: PlatformComponents::default(),
            topology,
            lambda_seconds: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.components;
        for p in [c.cpu, c.memory, c.uncore] {
            if [p.static_w, p.act_socket_w, p.act_core_w].iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::Config(format!("platform powers must be ≥ 0: {p:?}")));
            }
        }
        if self.topology.sockets == 0 || self.topology.cores_per_socket == 0 {
            return Err(Error::Config("topology needs at least one socket and core".into()));
        }
        if !(self.lambda_seconds > 0.0) {
            return Err(Error::Config("lambda_seconds must be > 0".into()));
        }
        Ok(())
    }

    /// Sockets and cores in use for `n` enqueuer/dequeuer pairs, filling one socket before
    /// starting the next.
    pub fn placement(&self, n: u32) -> (u32, u32) {
        let cores = 2 * n;
        let sockets = cores.div_ceil(self.topology.cores_per_socket).max(1);
        (sockets, cores)
    }
}

/// Application-dependent dynamic power constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicPowerParams {
    /// Per-thread CPU power in a parallel section (both operation classes).
    pub p_ps_cpu: f64,
    /// Per-thread CPU power in the enqueue retry loop.
    pub p_rl_cpu_e: f64,
    /// Per-thread CPU power in the dequeue retry loop.
    pub p_rl_cpu_d: f64,
    pub c_e_mem: f64,
    pub c_d_mem: f64,
    #[serde(default)]
    pub c_e_unc: f64,
    #[serde(default)]
    pub c_d_unc: f64,
}

/// Dynamic CPU power of `n` enqueuers and `n` dequeuers:
/// `n · Σ_o [P_rl_o + T_o·pw_o·(P_ps - P_rl_o)/(n·f)]`.
///
/// `T_o·pw_o/(n·f)` is clamped to `[0, 1]`, matching [`ratio`].
pub fn cpu_dynamic_power(
    params: &DynamicPowerParams,
    t_d: f64,
    t_e: f64,
    pw_d: f64,
    pw_e: f64,
    n: u32,
    f: f64,
) -> f64 {
    let nf = f64::from(n) * f;
    let term = |t: f64, pw: f64, p_rl: f64| {
        let busy = (t * pw / nf).clamp(0.0, 1.0);
        p_rl + busy * (params.p_ps_cpu - p_rl)
    };
    f64::from(n) * (term(t_e, pw_e, params.p_rl_cpu_e) + term(t_d, pw_d, params.p_rl_cpu_d))
}

/// Dynamic memory or uncore power: `r_e·c_e + r_d·c_d`.
pub fn passive_dynamic_power(c_e: f64, c_d: f64, r_e: f64, r_d: f64) -> f64 {
    r_e * c_e + r_d * c_d
}

/// Dynamic power of every component at one operating point.
pub fn dynamic_power(
    params: &DynamicPowerParams,
    t_d: f64,
    t_e: f64,
    pw_d: f64,
    pw_e: f64,
    n: u32,
    f: f64,
) -> ComponentWatts {
    let r_e = ratio(t_e, pw_e, n, f);
    let r_d = ratio(t_d, pw_d, n, f);
    ComponentWatts {
        cpu: cpu_dynamic_power(params, t_d, t_e, pw_d, pw_e, n, f),
        memory: passive_dynamic_power(params.c_e_mem, params.c_d_mem, r_e, r_d),
        uncore: passive_dynamic_power(params.c_e_unc, params.c_d_unc, r_e, r_d),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentBreakdown {
    pub static_w: f64,
    pub activation_w: f64,
    pub dynamic_w: f64,
    pub total_w: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub cpu: ComponentBreakdown,
    pub memory: ComponentBreakdown,
    pub uncore: ComponentBreakdown,
    pub total_w: f64,
}

impl PowerBreakdown {
    pub fn totals(&self) -> ComponentWatts {
        ComponentWatts {
            cpu: self.cpu.total_w,
            memory: self.memory.total_w,
            uncore: self.uncore.total_w,
        }
    }
}

/// Adds static and activation parts to dynamic powers.
pub fn total_power(
    platform: &PlatformPowers,
    dynamic: ComponentWatts,
    sockets_used: u32,
    cores_used: u32,
) -> PowerBreakdown {
    let part = |p: &ComponentPlatform, dynamic_w: f64| {
        let activation_w =
            f64::from(sockets_used) * p.act_socket_w + f64::from(cores_used) * p.act_core_w;
        ComponentBreakdown {
            static_w: p.static_w,
            activation_w,
            dynamic_w,
            total_w: p.static_w + activation_w + dynamic_w,
        }
    };
    let c = &platform.components;
    let cpu = part(&c.cpu, dynamic.cpu);
    let memory = part(&c.memory, dynamic.memory);
    let uncore = part(&c.uncore, dynamic.uncore);
    PowerBreakdown { cpu, memory, uncore, total_w: cpu.total_w + memory.total_w + uncore.total_w }
}

/// Energy per successful queue operation in joules: `P·λ / T`.
///
/// Infinite when `T` is not positive.
pub fn energy_per_op(total_w: f64, throughput: f64, lambda_seconds: f64) -> f64 {
    if throughput > 0.0 {
        total_w * lambda_seconds / throughput
    } else {
        f64::INFINITY
    }
}
