//! Loss budgets: diffraction, per-satellite absorption and fixed overheads.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::ChainTrace;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Source in the middle, one photon down each arm.
    #[default]
    EntanglementPair,
    /// Source and detector on the ground; one photon over the whole chain.
    QubitTransmission,
}

impl Protocol {
    /// How many independent copies of a single-arm loss the protocol pays.
    pub fn arms(self) -> i32 {
        match self {
            Protocol::EntanglementPair => 2,
            Protocol::QubitTransmission => 1,
        }
    }
}

/// Setup-error, atmospheric and detector efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overheads {
    pub eta_e: f64,
    pub eta_a: f64,
    pub eta_d: f64,
}

impl Default for Overheads {
    /// `eta_e` is the small-error Monte Carlo mean over the error-free
    /// transmission (0.78/0.925); the three together cost 10 dB for a pair.
    fn default() -> Self {
        Self { eta_e: 0.843, eta_a: 0.8, eta_d: 0.22 }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl Overheads {
    pub fn validate(&self) -> Result<()> {
        check_probability("eta_e", self.eta_e)?;
        check_probability("eta_a", self.eta_a)?;
        check_probability("eta_d", self.eta_d)
    }
}

/// Transmission after `n` satellites each losing `per_sat_loss`.
pub fn satellite_absorption(n: usize, per_sat_loss: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&per_sat_loss) {
        return Err(SimError::InvalidArgument(format!("per-satellite loss must lie in [0, 1), got {per_sat_loss}")));
    }
    Ok((1.0 - per_sat_loss).powi(n as i32))
}

/// Combined overhead: `η_e²·η_a²·η_d` for a pair (both photons see setup
/// errors and air, one coincidence detection), `η_e·η_a·η_d` otherwise.
pub fn overhead(factors: Overheads, protocol: Protocol) -> Result<f64> {
    factors.validate()?;
    let k = protocol.arms();
    Ok(factors.eta_e.powi(k) * factors.eta_a.powi(k) * factors.eta_d)
}

pub fn to_db(transmission: f64) -> f64 {
    // Adding zero turns the -0.0 of a lossless component into 0.0.
    -10.0 * transmission.log10() + 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetComponent {
    pub name: &'static str,
    pub transmission: f64,
}

impl BudgetComponent {
    pub fn loss_db(&self) -> f64 {
        to_db(self.transmission)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBudget {
    /// Single-arm diffraction transmission, including any ground links.
    pub diffraction: f64,
    /// Satellites one photon passes.
    pub satellites: usize,
    pub per_satellite_loss: f64,
    pub overheads: Overheads,
    pub protocol: Protocol,
    /// Turbulent uplink capture, qubit transmission only.
    pub uplink_capture: Option<f64>,
}

impl LossBudget {
    pub fn from_trace(trace: &ChainTrace, satellites: usize, per_satellite_loss: f64, protocol: Protocol) -> Self {
        Self {
            diffraction: trace.final_transmission(),
            satellites,
            per_satellite_loss,
            overheads: Overheads::default(),
            protocol,
            uplink_capture: None,
        }
    }

    pub fn components(&self) -> Result<Vec<BudgetComponent>> {
        check_probability("diffraction transmission", self.diffraction)?;
        let k = self.protocol.arms();
        let mut out = vec![
            BudgetComponent { name: "diffraction", transmission: self.diffraction.powi(k) },
            BudgetComponent {
                name: "satellite_absorption",
                transmission: satellite_absorption(self.satellites, self.per_satellite_loss)?.powi(k),
            },
            BudgetComponent { name: "overhead", transmission: overhead(self.overheads, self.protocol)? },
        ];
        if let Some(c) = self.uplink_capture {
            check_probability("uplink capture", c)?;
            out.push(BudgetComponent { name: "uplink_capture", transmission: c });
        }
        Ok(out)
    }

    pub fn total_transmission(&self) -> Result<f64> {
        Ok(self.components()?.iter().map(|c| c.transmission).product())
    }

    /// Writes `component,transmission,loss_db` with a closing `total` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let comps = self.components()?;
        let total = comps.iter().map(|c| c.transmission).product::<f64>();
        let io = |e: csv::Error| SimError::InvalidArgument(format!("budget CSV: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["component", "transmission", "loss_db"]).map_err(io)?;
        for c in comps.iter().chain(std::iter::once(&BudgetComponent { name: "total", transmission: total })) {
            w.write_record(&[c.name.to_string(), format!("{:e}", c.transmission), format!("{:.6}", c.loss_db())])
                .map_err(io)?;
        }
        w.flush().map_err(|e| SimError::InvalidArgument(format!("budget CSV: {e}")))
    }
}

/// Total loss in dB.
pub fn total_budget(budget: &LossBudget) -> Result<f64> {
    Ok(to_db(budget.total_transmission()?))
}
