//! Tabular Q-learning over simulated privacy-settings environments.

mod env;
mod policy;
mod qlearn;
mod space;

pub use env::{DatasetEnv, PersonaEnv};
pub use policy::{policy_as_classifier, QPolicy, QPolicyDocument, POLICY_SPREAD};
pub use qlearn::{
    epsilon_greedy, q_update, train_q, EpisodeLog, EpisodeRecord, Environment, QTable,
    QTableDocument, RlConfig, Transition, QTABLE_FORMAT_VERSION,
};
pub use space::{
    Action, DenialBucket, EnvState, FeatureBinding, StateSpace, CONTEXT_FEATURE, DENIALS_FEATURE,
    NUM_ACTIONS, PERMISSION_FEATURE,
};
