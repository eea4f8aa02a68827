//! Built-in example games.

use nalgebra::{DMatrix, DVector};

use crate::matfn::MatrixFunction;
use crate::model::GameSpec;

/// Parameters of the two-echelon supply-chain game: a manufacturer
/// (leader, control `u`) and a retailer (follower, cheap control `v`)
/// influence the brand badwill and the retailer's inventory level.
#[derive(Debug, Clone, Copy)]
pub struct SupplyChainParams {
    /// Badwill self-growth rate.
    pub a1: f64,
    /// Badwill-to-inventory coupling.
    pub a2: f64,
    /// Manufacturer effort effect on badwill (reducing).
    pub b1: f64,
    /// Manufacturer effort effect on inventory.
    pub b2: f64,
    /// Retailer effort effect on badwill.
    pub c1: f64,
    /// Retailer effort effect on inventory (reducing).
    pub c2: f64,
    /// Manufacturer's badwill cost weight.
    pub k_m: f64,
    /// Retailer's inventory cost weight.
    pub k_r: f64,
    /// Horizon.
    pub tf: f64,
}

impl Default for SupplyChainParams {
    fn default() -> Self {
        Self { a1: 0.1, a2: 0.2, b1: 0.5, b2: 0.4, c1: 0.2, c2: 0.6, k_m: 1.0, k_r: 5.0, tf: 2.0 }
    }
}

/// The supply-chain game with the given initial state `Z₀ = (badwill,
/// inventory)` and follower weight `weight_v` (ε² for the cheap-follower
/// regime; the exact value used in a solve is supplied to the solver).
///
/// Note: the source experiment never reports its `Z₀`; `(1, 1)ᵀ` is this
/// crate's default and quantitative cost-error comparisons are sensitive
/// to that choice.
pub fn supply_chain_with(params: SupplyChainParams, z0: DVector<f64>, weight_u: f64, weight_v: f64) -> GameSpec {
    let p = params;
    GameSpec {
        n: 2,
        r: 1,
        s: 1,
        tf: p.tf,
        a_cal: MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[p.a1, 0.0, p.a2, 0.0])),
        b_u_cal: MatrixFunction::constant(&DMatrix::from_column_slice(2, 1, &[-p.b1, p.b2])),
        b_v_cal: MatrixFunction::constant(&DMatrix::from_column_slice(2, 1, &[p.c1, -p.c2])),
        d_u_cal: MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[p.k_m, 0.0, 0.0, 0.0])),
        d_v_cal: MatrixFunction::constant(&DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, p.k_r])),
        g_uv: MatrixFunction::zeros(1, 1),
        g_vu: MatrixFunction::zeros(1, 1),
        z0,
        weight_u,
        weight_v,
    }
}

/// The supply-chain game with default parameters, `Z₀ = (1, 1)ᵀ`, and
/// unit own-control weights (the solver's ε supplies the cheap weight).
pub fn supply_chain() -> GameSpec {
    supply_chain_with(SupplyChainParams::default(), DVector::from_column_slice(&[1.0, 1.0]), 1.0, 1.0)
}

/// The complement matrix used in the source experiment: `B_c = (c₂, c₁)ᵀ`.
pub fn supply_chain_complement(params: &SupplyChainParams) -> MatrixFunction {
    MatrixFunction::constant(&DMatrix::from_column_slice(2, 1, &[params.c2, params.c1]))
}
