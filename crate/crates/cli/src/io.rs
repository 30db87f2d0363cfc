//! File formats: games, strategy mixtures, and rank-T mixture inputs.
//!
//! Game schema: `{"players": m, "types": [K_i], "actions": [n_i],
//! "prior": flat row-major over the type profiles, "utilities": one
//! flat row-major table per player over (types, actions)}`. Row-major
//! with the last index fastest is the bit-exact contract everywhere.
//!
//! Mixture schema: `{"components": [[per-player per-type probability
//! arrays]]}`, uniform component weights implied.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use equilearn_core::dist::FiniteDist;
use equilearn_core::gadget::RankTCce;
use equilearn_core::game::{BayesianGame, BehaviorStrategy, StrategyMixture};

#[derive(Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub players: usize,
    pub types: Vec<usize>,
    pub actions: Vec<usize>,
    pub prior: Vec<f64>,
    pub utilities: Vec<Vec<f64>>,
}

impl GameFile {
    pub fn from_game(game: &BayesianGame) -> Self {
        GameFile {
            players: game.num_players(),
            types: game.type_counts().to_vec(),
            actions: game.action_counts().to_vec(),
            prior: game.prior().probs().to_vec(),
            utilities: (0..game.num_players())
                .map(|i| game.utility_table(i).to_vec())
                .collect(),
        }
    }

    pub fn into_game(self) -> Result<BayesianGame> {
        if self.players != self.types.len() || self.players != self.actions.len() {
            bail!(
                "player count {} disagrees with types ({}) or actions ({})",
                self.players,
                self.types.len(),
                self.actions.len()
            );
        }
        BayesianGame::from_tables(self.types, self.actions, self.prior, self.utilities)
            .context("invalid game tables")
    }
}

pub fn load_game(path: &Path) -> Result<BayesianGame> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read game file {}", path.display()))?;
    let file: GameFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse game file {}", path.display()))?;
    file.into_game()
}

pub fn save_game(path: &Path, game: &BayesianGame) -> Result<()> {
    let text = serde_json::to_string_pretty(&GameFile::from_game(game))?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Uniform mixture of product profiles:
/// `components[c][player][type][action]`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MixtureFile {
    pub components: Vec<Vec<Vec<Vec<f64>>>>,
}

impl MixtureFile {
    pub fn from_mixture(mu: &StrategyMixture) -> Self {
        MixtureFile {
            components: mu
                .components()
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|b| b.dists().iter().map(|d| d.probs().to_vec()).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn into_mixture(self) -> Result<StrategyMixture> {
        let components = self
            .components
            .into_iter()
            .enumerate()
            .map(|(c, players)| {
                players
                    .into_iter()
                    .enumerate()
                    .map(|(i, per_type)| {
                        let dists = per_type
                            .into_iter()
                            .enumerate()
                            .map(|(k, probs)| {
                                FiniteDist::new(probs).with_context(|| {
                                    format!(
                                        "component {c}, player {i}, type {k}: invalid distribution"
                                    )
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        BehaviorStrategy::new(dists)
                            .with_context(|| format!("component {c}, player {i}"))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        StrategyMixture::new(components).context("invalid mixture")
    }
}

pub fn load_mixture(path: &Path, game: &BayesianGame) -> Result<StrategyMixture> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read mixture file {}", path.display()))?;
    let file: MixtureFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse mixture file {}", path.display()))?;
    let mixture = file.into_mixture()?;
    mixture
        .validate_for(game)
        .context("mixture does not match the game shape")?;
    Ok(mixture)
}

pub fn save_mixture(path: &Path, mu: &StrategyMixture) -> Result<()> {
    let text = serde_json::to_string_pretty(&MixtureFile::from_mixture(mu))?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Rank-T input for the reduction: history-independent player behaviors
/// plus an optional referee distribution per component.
#[derive(Debug, Serialize, Deserialize)]
pub struct CceFile {
    pub components: Vec<CceComponentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CceComponentFile {
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kibitzer: Option<Vec<f64>>,
}

pub fn load_cce(path: &Path, game: &BayesianGame) -> Result<(RankTCce, usize)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read rank-T file {}", path.display()))?;
    let file: CceFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse rank-T file {}", path.display()))?;
    if file.components.is_empty() {
        bail!("rank-T file has no components");
    }
    let rank = file.components.len();
    let behavior = |rows: Vec<Vec<f64>>, label: &str| -> Result<BehaviorStrategy> {
        let dists = rows
            .into_iter()
            .map(|probs| FiniteDist::new(probs).with_context(|| format!("{label}: bad row")))
            .collect::<Result<Vec<_>>>()?;
        BehaviorStrategy::new(dists).with_context(|| label.to_string())
    };
    let mut players = Vec::with_capacity(rank);
    let mut kibitzers: Option<Vec<FiniteDist>> = None;
    for (c, component) in file.components.into_iter().enumerate() {
        let p1 = behavior(component.p1, &format!("component {c} p1"))?;
        let p2 = behavior(component.p2, &format!("component {c} p2"))?;
        players.push(vec![p1, p2]);
        match (component.kibitzer, &mut kibitzers) {
            (Some(probs), Some(list)) => list.push(FiniteDist::new(probs)?),
            (Some(probs), none) => {
                if c != 0 {
                    bail!("either every component or none carries a referee distribution");
                }
                *none = Some(vec![FiniteDist::new(probs)?]);
            }
            (None, Some(_)) => {
                bail!("either every component or none carries a referee distribution")
            }
            (None, None) => {}
        }
    }
    let mixture = StrategyMixture::new(players).context("invalid components")?;
    let mu = RankTCce::from_behavior_components(game, &mixture, kibitzers)
        .context("rank-T mixture does not match the game")?;
    Ok((mu, rank))
}
