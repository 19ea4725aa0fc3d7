//! Parameters of every subcommand. Each set exists twice: as optional
//! flags, and resolved with defaults (the form embedded in outputs).

use clap::Args;
use serde::{Deserialize, Serialize};

macro_rules! params {
    (
        $(#[$m:meta])*
        $flags:ident => $params:ident {
            $( $(#[$fm:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        #[derive(Debug, Clone, Default, Args, Serialize)]
        pub struct $flags {
            $( $(#[$fm])* #[arg(long, allow_negative_numbers = true)] pub $field: Option<$ty>, )*
        }

        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $params {
            $( pub $field: $ty, )*
        }

        impl Default for $params {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }
    };
}

params! {
    SimulateFlags => SimulateParams {
        /// fbm, stationary, bridge or ruin
        model: String = "fbm".into(),
        alpha: f64 = 1.0,
        a: f64 = 1.0,
        delta: f64 = 1.0,
        sigma: f64 = 1.0,
        start: f64 = 0.0,
        end: f64 = 1.0,
        intervals: usize = 256,
        /// Paths written to the output.
        paths: usize = 10,
        /// Linear drift `g(t) = drift·t` added before taking the supremum.
        drift: f64 = 0.0,
        /// Threshold for an exceedance estimate over `n` replications.
        u: Option<f64> = None,
        n: u64 = 100_000,
        seed: u64 = 1,
    }
}

params! {
    ConstantFlags => ConstantParams {
        /// pickands or piterbarg
        kind: String = "pickands".into(),
        alpha: f64 = 1.0,
        a: f64 = 1.0,
        /// zero, linear, power, abs-power or ruin
        trend: String = "zero".into(),
        c: f64 = 1.0,
        gamma: f64 = 1.0,
        delta: f64 = 1.0,
        sigma: f64 = 1.0,
        start: f64 = 0.0,
        /// Finite right end; without it the limit over the schedule is taken.
        end: Option<f64> = None,
        /// Grow both ends of the interval (limit over the whole line).
        two_sided: bool = false,
        #[arg(value_delimiter = ',')]
        schedule: Vec<f64> = vec![4.0, 8.0, 16.0],
        tol: f64 = 0.01,
        grid_step: f64 = 1.0 / 512.0,
        /// Grid-bias correction against the sub-lattice with this stride; 1 disables.
        refine_stride: usize = 2,
        /// direct or shift-averaged
        estimator: String = "shift-averaged".into(),
        n: u64 = 100_000,
        seed: u64 = 1,
    }
}

params! {
    ApproxFlags => ApproxParams {
        u: f64 = 5.0,
        alpha: f64 = 1.0,
        a: f64 = 1.0,
        beta: f64 = 2.0,
        b: f64 = 1.0,
        c: f64 = 1.0,
        gamma: f64 = 1.0,
        sigma: f64 = 1.0,
        g_m: f64 = 0.0,
        /// interior, left, right, near-left:D or near-right:D
        position: String = "interior".into(),
        delta: f64 = 1.0,
        /// closed-form, monte-carlo or auto (closed form where known)
        constants: String = "auto".into(),
        mc_n: u64 = 100_000,
        grid_step: f64 = 1.0 / 512.0,
        #[arg(value_delimiter = ',')]
        schedule: Vec<f64> = vec![4.0, 8.0, 16.0],
        tol: f64 = 0.01,
        seed: u64 = 1,
    }
}

params! {
    RuinFlags => RuinParams {
        #[arg(value_delimiter = ',')]
        u: Vec<f64> = vec![2.0, 4.0, 8.0],
        c: f64 = 1.0,
        delta: f64 = 1.0,
        sigma: f64 = 1.0,
        constants: String = "auto".into(),
        /// Monte Carlo replications on the time-changed process; 0 skips it.
        n: u64 = 0,
        seed: u64 = 1,
        first_step: f64 = 1e-6,
        ratio: f64 = 1.1,
        max_step: f64 = 1.0 / 8192.0,
        mc_n: u64 = 100_000,
        grid_step: f64 = 1.0 / 512.0,
        #[arg(value_delimiter = ',')]
        schedule: Vec<f64> = vec![4.0, 8.0, 16.0],
        tol: f64 = 0.01,
    }
}

params! {
    PassageFlags => PassageParams {
        u: f64 = 1.5,
        c: f64 = 0.5,
        #[arg(value_delimiter = ',')]
        x: Vec<f64> = vec![-0.25, 0.0, 0.25],
        n: u64 = 1_000_000,
        grid: usize = 4096,
        seed: u64 = 1,
        alpha: f64 = 1.0,
        a: f64 = 1.0,
        gamma: f64 = 1.0,
        position: String = "interior".into(),
        delta: f64 = 1.0,
        sigma: f64 = 1.0,
    }
}

params! {
    ValidateFlags => ValidateParams {
        #[arg(value_delimiter = ',')]
        u: Vec<f64> = vec![1.5],
        c: f64 = 0.5,
        delta: f64 = 1.0,
        sigma: f64 = 1.0,
        n: u64 = 1_000_000,
        /// Intervals of the finest bridge grid.
        grid: usize = 4096,
        /// Nested bridge grids used for the bias correction.
        levels: usize = 3,
        /// Bridge asymptotic: `stated` is `e^{-2(u²+cu)}`, `theorem` the
        /// moving-maximizer evaluation `u√(8π)Ψ(2√(u²+cu))`.
        formula: String = "stated".into(),
        seed: u64 = 1,
        tolerance: f64 = 0.1,
        z: f64 = 2.0,
        first_step: f64 = 1e-6,
        ratio: f64 = 1.1,
        max_step: f64 = 1.0 / 8192.0,
    }
}
