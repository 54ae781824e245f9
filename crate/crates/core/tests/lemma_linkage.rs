use orlicz_lab::carleson::{build_profile, ProfileRequest};
use orlicz_lab::concave::{build_sequence, build_v, orlicz_from_v, ratio_delta, MonotoneFunctionSpec, MonotoneKind};
use orlicz_lab::geometry::Space;
use orlicz_lab::orlicz::DEFAULT_INVERSE_TOL;
use orlicz_lab::symbol::SymbolMap;

/// `f(x) = x^N` against `g(x) = 1 / profile(1/x)` from a measured Hardy profile:
/// the ψ built from them keeps `ψ⁻¹(x^N)/ψ⁻¹(g(x))` above `δ̂`, so the window
/// masses are not little-oh of `1/ψ(Aψ⁻¹(1/h^N))` for `A = 1/δ̂`.
#[test]
fn profile_reciprocal_yields_witness() {
    let map = SymbolMap::identity(1);
    let mut req = ProfileRequest::new(Space::Hardy, 1 << 16, 12);
    req.h_grid = (1..=10).map(|k| 2f64.powi(-k)).collect();
    let profile = build_profile(&map, &req).unwrap();
    let mut points: Vec<(f64, f64)> = profile
        .records
        .iter()
        .filter(|r| r.hits >= 30)
        .map(|r| (1.0 / r.h, 1.0 / r.estimate))
        .collect();
    assert!(points.len() >= 8);
    // g must start at the origin to define a table on [0, x_max]
    points.insert(0, (0.0, 0.5 * points[0].1));
    for w in points.windows(2) {
        assert!(w[1].1 > w[0].1, "profile reciprocal not increasing: {w:?}");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).skip(1).collect();
    let g = MonotoneFunctionSpec::unbounded(MonotoneKind::Tabulated { points }).unwrap();
    let f = MonotoneFunctionSpec::power(1.0).unwrap();
    let seq = build_sequence(&f, &g, 60).unwrap();
    assert_eq!(seq.check_spacing(), None);
    assert_eq!(seq.check_domination(&f, &g, &xs).unwrap(), None);
    let v = build_v(&seq).unwrap();
    let psi = orlicz_from_v(&v).unwrap();
    let rd = ratio_delta(&v, &f, &g, &xs).unwrap();
    assert!(rd.delta_hat > 0.0 && rd.points_used >= 3, "{rd:?}");
    let a = 1.0 / rd.delta_hat;
    let mut checked = 0;
    for rec in &profile.records {
        let x = 1.0 / rec.h;
        if rec.hits < 30 || x > *v.breakpoints().last().unwrap() || 1.0 / rec.estimate > *v.breakpoints().last().unwrap() || x < 1.0 {
            continue;
        }
        let ratio = psi.inverse(x, DEFAULT_INVERSE_TOL).unwrap()
            / psi.inverse(1.0 / rec.estimate, DEFAULT_INVERSE_TOL).unwrap();
        assert!(ratio >= rd.delta_hat * (1.0 - 1e-12));
        let product = rec.estimate * psi.evaluate(a * psi.inverse(x, DEFAULT_INVERSE_TOL).unwrap()).unwrap();
        assert!(product >= 1.0 - 1e-9, "h = {}: {product}", rec.h);
        checked += 1;
    }
    assert!(checked >= 3);
}
