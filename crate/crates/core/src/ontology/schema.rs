use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EntityType;
use crate::slotfill::SlotName;

/// Allowed entity types and cardinality of one slot. `max == None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRule {
    pub allowed_types: BTreeSet<EntityType>,
    pub min_card: u32,
    pub max_card: Option<u32>,
}

/// Valid entity types and cardinalities per course slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSchema {
    pub rows: BTreeMap<SlotName, SlotRule>,
}

impl Default for SlotSchema {
    fn default() -> Self {
        use EntityType::*;
        let row = |types: &[EntityType], min, max| SlotRule {
            allowed_types: types.iter().copied().collect(),
            min_card: min,
            max_card: max,
        };
        let rows = BTreeMap::from([
            (SlotName::School, row(&[School], 1, Some(1))),
            (SlotName::TargetGroup, row(&[Topic, Occupation, Degree, Education, Industry, Position], 0, None)),
            (SlotName::Prerequisite, row(&[Topic, Skill, Occupation, Position, Education], 0, None)),
            (SlotName::LearningObjective, row(&[Topic, Skill, Occupation], 1, None)),
            (SlotName::CourseContent, row(&[Topic, Skill], 1, None)),
            (SlotName::Certificates, row(&[Degree, Education], 0, None)),
        ]);
        SlotSchema { rows }
    }
}

impl SlotSchema {
    pub fn rule(&self, slot: SlotName) -> Option<&SlotRule> {
        self.rows.get(&slot)
    }

    /// `Related` accepts every type; other slots only their allowed types.
    pub fn allows(&self, slot: SlotName, etype: EntityType) -> bool {
        match slot {
            SlotName::Related => true,
            _ => self.rows.get(&slot).is_some_and(|r| r.allowed_types.contains(&etype)),
        }
    }

    /// Adds allowed types. The base rows can only grow.
    pub fn extend(&mut self, slot: SlotName, types: impl IntoIterator<Item = EntityType>) {
        if let Some(rule) = self.rows.get_mut(&slot) {
            rule.allowed_types.extend(types);
        }
    }
}
