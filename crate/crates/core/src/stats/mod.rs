//! Tick statistics: delay functions and their accuracy, Monte Carlo tick
//! records, empirical accuracy estimates and the alternate-ticks game.

mod atg;
mod delay;
mod empirical;
mod sampler;

pub use atg::{atg_referee, play, AtgGame, AtgOutcome, AtgPlay, AtgSummary, Player};
pub use delay::{
    accuracy, delay_function, delay_function_with, trapezoid, AccuracySummary, DelayFunction, HorizonWarning,
    MIN_MOMENT_MASS,
};
pub use empirical::{empirical_accuracy, EmpiricalAccuracy};
pub use sampler::{
    sample_trajectories, sample_trajectories_with, SamplerOptions, TickRecord, RNG_ALGORITHM, SURVIVAL_TOL,
};
