//! Central finite-difference verification of tape gradients.
//!
//! The checker only evaluates forward values, so it is independent of the
//! backward rules it validates.

use super::graph::{Graph, NodeId, ParamStore};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    /// `‖analytic − numeric‖₂ / max(‖analytic‖₂, ‖numeric‖₂)`.
    pub tensor_rel_err: f64,
    /// Worst per-coordinate `|a − n| / max(|a|, |n|, floor)`.
    pub max_coord_rel_err: f64,
    /// `max(‖analytic‖₂, ‖numeric‖₂)`.
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn worst_tensor(&self) -> f64 {
        self.params.iter().map(|p| p.tensor_rel_err).fold(0.0, f64::max)
    }

    pub fn worst_coord(&self) -> f64 {
        self.params.iter().map(|p| p.max_coord_rel_err).fold(0.0, f64::max)
    }
}

/// Compares analytic gradients against central differences with step `h`.
///
/// `loss` must build a fresh graph from the store and return the scalar
/// loss node. `floor` bounds the denominator of the per-coordinate relative
/// error so that coordinates whose true gradient is zero are compared on an
/// absolute scale.
pub fn check_gradients<F>(store: &mut ParamStore, h: f64, floor: f64, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(Graph, NodeId)>,
{
    store.zero_grad();
    let (graph, node) = loss(store)?;
    graph.backward(node, store)?;
    let analytic: Vec<Vec<f64>> = store.iter().map(|p| p.gradient.to_vec()).collect();

    let mut params = Vec::new();
    let ids: Vec<_> = store.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let base = store.value(id).clone();
        let mut numeric = vec![0.0; base.len()];
        for j in 0..base.len() {
            let mut plus = base.to_vec();
            plus[j] += h;
            store.set_value(id, base.with_data(plus)?)?;
            let (g, n) = loss(store)?;
            let fp = g.value(n).item();
            let mut minus = base.to_vec();
            minus[j] -= h;
            store.set_value(id, base.with_data(minus)?)?;
            let (g, n) = loss(store)?;
            let fm = g.value(n).item();
            numeric[j] = (fp - fm) / (2.0 * h);
        }
        store.set_value(id, base)?;

        let a = &analytic[pi];
        let diff = a.iter().zip(&numeric).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = na.max(nn);
        let tensor_rel_err = if denom == 0.0 { 0.0 } else { diff / denom };
        let max_coord_rel_err = a
            .iter()
            .zip(&numeric)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
            .fold(0.0, f64::max);
        params.push(ParamCheck {
            name: store.get(id).name.clone(),
            tensor_rel_err,
            max_coord_rel_err,
            scale: denom,
        });
    }
    Ok(GradCheckReport { params })
}
