use rand::Rng as _;

use super::qlearn::Environment;
use super::space::{Action, DenialBucket, FeatureBinding, StateSpace};
use crate::data::{FeatureSchema, LabeledDataset, PrivacyChoice};
use crate::datagen::{fresh_state, sample_index, sample_transition, GeneratorConfig, Persona};
use crate::error::{Error, Result};
use crate::seed::Rng;

fn random_setting(rng: &mut Rng) -> PrivacyChoice {
    PrivacyChoice::from_index(rng.random_range(0..3))
}

/// Simulated user population. Every request comes from a persona drawn from
/// the mixture; the step is scored by [`sample_transition`] and the next
/// request is drawn from a newly sampled persona.
#[derive(Debug, Clone)]
pub struct PersonaEnv {
    schema: FeatureSchema,
    space: StateSpace,
    personas: Vec<Persona>,
    weights: Vec<f64>,
    current: usize,
}

impl PersonaEnv {
    pub fn new(config: &GeneratorConfig) -> Result<Self> {
        config.validate()?;
        Ok(PersonaEnv {
            space: StateSpace::from_schema(&config.schema)?,
            schema: config.schema.clone(),
            personas: config.personas.clone(),
            weights: config.mixture_weights.clone(),
            current: 0,
        })
    }

    pub fn single(persona: Persona, schema: FeatureSchema) -> Result<Self> {
        Ok(PersonaEnv {
            space: StateSpace::from_schema(&schema)?,
            schema,
            personas: vec![persona],
            weights: vec![1.0],
            current: 0,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn current_persona(&self) -> &Persona {
        &self.personas[self.current]
    }
}

impl Environment for PersonaEnv {
    fn num_states(&self) -> usize {
        self.space.len()
    }

    fn reset(&mut self, rng: &mut Rng) -> usize {
        self.current = sample_index(&self.weights, rng);
        let setting = random_setting(rng);
        let s = fresh_state(&self.personas[self.current], &self.schema, &self.space, setting, rng);
        self.space.index(&s)
    }

    fn step(&mut self, state: usize, action: Action, rng: &mut Rng) -> (usize, f64) {
        let s = self.space.state(state);
        let (next, reward) = sample_transition(
            &self.personas[self.current],
            &self.schema,
            &self.space,
            &s,
            action,
            rng,
        );
        self.current = sample_index(&self.weights, rng);
        let next = fresh_state(&self.personas[self.current], &self.schema, &self.space, next.setting, rng);
        (self.space.index(&next), reward)
    }
}

/// Replays labeled records as privacy requests: each step presents a record
/// drawn uniformly with replacement and rewards +1 when the post-action
/// setting equals the record's label.
#[derive(Debug, Clone)]
pub struct DatasetEnv {
    space: StateSpace,
    requests: Vec<(usize, usize, DenialBucket, PrivacyChoice)>,
    current: usize,
}

impl DatasetEnv {
    pub fn new(ds: &LabeledDataset) -> Result<Self> {
        let space = StateSpace::from_schema(&ds.schema)?;
        let binding = FeatureBinding::from_schema(&ds.schema)?;
        let requests: Vec<_> = ds
            .records
            .iter()
            .filter_map(|r| {
                let label = r.label?;
                let s = binding.state_of(&space, r, PrivacyChoice::Ask);
                Some((s.context, s.permission, s.bucket, label))
            })
            .collect();
        if requests.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(DatasetEnv {
            space,
            requests,
            current: 0,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    fn present(&mut self, setting: PrivacyChoice, rng: &mut Rng) -> usize {
        self.current = rng.random_range(0..self.requests.len());
        let (context, permission, bucket, _) = self.requests[self.current];
        self.space.index(&super::EnvState {
            context,
            permission,
            setting,
            bucket,
        })
    }
}

impl Environment for DatasetEnv {
    fn num_states(&self) -> usize {
        self.space.len()
    }

    fn reset(&mut self, rng: &mut Rng) -> usize {
        let setting = random_setting(rng);
        self.present(setting, rng)
    }

    fn step(&mut self, state: usize, action: Action, rng: &mut Rng) -> (usize, f64) {
        let setting = action.apply(self.space.state(state).setting);
        let label = self.requests[self.current].3;
        let reward = if setting == label { 1.0 } else { -1.0 };
        (self.present(setting, rng), reward)
    }
}
