use crate::paths::Path;

/// Skorohod map onto `{x : x[axis] >= 0}`:
/// `Γ(w)^axis(t) = w^axis(t) - min(inf_{s<=t} w^axis(s), 0)`, other
/// coordinates unchanged. The running infimum is taken over grid nodes.
pub fn skorohod_map(free: &Path, axis: usize) -> Path {
    let mut out = free.clone();
    let mut running_min = f64::INFINITY;
    for n in 0..out.len() {
        let v = free.node(n)[axis];
        running_min = running_min.min(v);
        out.node_mut(n)[axis] = v - running_min.min(0.0);
    }
    out
}

/// Skorohod map onto ℝ₊^m = `{x : x¹ >= 0}`.
pub fn reflect_halfspace(free: &Path) -> Path {
    skorohod_map(free, 0)
}
