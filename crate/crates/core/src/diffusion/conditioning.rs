use serde::{Deserialize, Serialize};

use crate::backbone::ForecastMode;
use crate::data::TrajectoryClip;
use crate::error::{invalid, Result};

/// The conditioning regimes. Team, league and objective variants are
/// fine-tuned checkpoints of a base model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Unconditioned,
    Opponent,
    Team,
    League,
    Objective,
}

impl Setting {
    /// Forecast mode of the base model the setting builds on.
    pub fn mode(self, target: usize) -> ForecastMode {
        match self {
            Setting::Unconditioned | Setting::League | Setting::Objective => ForecastMode::Joint,
            Setting::Opponent | Setting::Team => ForecastMode::single(target),
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconditioned" => Ok(Setting::Unconditioned),
            "opponent" => Ok(Setting::Opponent),
            "team" => Ok(Setting::Team),
            "league" => Ok(Setting::League),
            "objective" => Ok(Setting::Objective),
            other => Err(invalid(format!("unknown setting {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Offense,
    Defense,
}

impl Objective {
    pub fn subtypes(self) -> &'static [&'static str] {
        match self {
            Objective::Offense => &["goal", "shot_saved", "shot_off_target"],
            Objective::Defense => &["clearance", "defended"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Filter {
    Team(String),
    League(String),
    Objective(Objective),
}

impl Filter {
    pub fn matches(&self, clip: &TrajectoryClip) -> bool {
        let m = &clip.meta;
        match self {
            Filter::Team(id) => m.team0.as_deref() == Some(id) || m.team1.as_deref() == Some(id),
            Filter::League(id) => m.league.as_deref() == Some(id),
            Filter::Objective(o) => m.event.as_deref().is_some_and(|e| o.subtypes().contains(&e)),
        }
    }
}

/// Clips carrying the requested tag.
pub fn condition_tagging<'a>(clips: &'a [TrajectoryClip], filter: &Filter) -> Result<Vec<&'a TrajectoryClip>> {
    let out: Vec<_> = clips.iter().filter(|c| filter.matches(c)).collect();
    if out.is_empty() {
        return Err(invalid(format!("no clip matches {filter:?}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ClipMeta, Sport};

    fn tagged(league: &str, team: &str, event: Option<&str>) -> TrajectoryClip {
        TrajectoryClip::new(vec![], 25.0, Sport::Soccer, 11).unwrap().with_meta(ClipMeta {
            team0: Some(team.into()),
            league: Some(league.into()),
            event: event.map(Into::into),
            ..Default::default()
        })
    }

    #[test]
    fn filters() {
        let clips = vec![
            tagged("A-League", "Auckland", Some("goal")),
            tagged("Bundesliga", "Bremen", Some("clearance")),
            tagged("A-League", "Sydney", Some("shot_saved")),
            tagged("A-League", "Sydney", Some("corner")),
        ];
        assert_eq!(condition_tagging(&clips, &Filter::League("A-League".into())).unwrap().len(), 3);
        let off = condition_tagging(&clips, &Filter::Objective(Objective::Offense)).unwrap();
        assert_eq!(off.len(), 2);
        assert!(off.iter().all(|c| ["goal", "shot_saved"].contains(&c.meta.event.as_deref().unwrap())));
        assert_eq!(condition_tagging(&clips, &Filter::Objective(Objective::Defense)).unwrap().len(), 1);
        assert!(condition_tagging(&clips, &Filter::Team("Nobody".into())).is_err());
    }

    #[test]
    fn modes() {
        assert_eq!(Setting::League.mode(0), ForecastMode::Joint);
        assert_eq!(Setting::Team.mode(1), ForecastMode::single(1));
    }
}
