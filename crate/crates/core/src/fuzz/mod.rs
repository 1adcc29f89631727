//! Generational fuzzing driven by path fitness.

mod campaign;
mod cwj;
mod mutate;
mod pool;

pub use campaign::{
    run_campaign, CampaignAbort, CampaignConfig, CampaignError, CampaignHooks, CampaignReport, CrashRecord,
    FitnessMode, GenerationStats, NoHooks, StopReason,
};
pub use cwj::{cwj_step, CwjError, CwjState, MutationStrategy};
pub use mutate::{edit_distance, mutate_heavy, mutate_slight, splice, INTERESTING, SLIGHT_EDIT_BUDGET};
pub use pool::{select_seeds, CrashKey, Origin, Seed, SeedPool, SelectError};
