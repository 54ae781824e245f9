use orlicz_lab::carleson::{build_profile, recommended_sampling, CarlesonProfile, ProfileRequest};
use orlicz_lab::criteria::{
    builtin_psi, exit, psi_carleson_fit, run_battery, BatteryConfig, CarlesonMode, ConsistencyCheck, CriterionId,
};
use orlicz_lab::geometry::Space;
use orlicz_lab::orlicz::{ImplicationStatus, OrliczFunction};
use orlicz_lab::symbol::SymbolMap;
use orlicz_lab::{Error, Verdict};

fn profile(map: &SymbolMap, space: Space, seed: u64) -> CarlesonProfile {
    let mut req = ProfileRequest::new(space, 1 << 16, seed);
    req.sampling = recommended_sampling(map);
    build_profile(map, &req).unwrap()
}

#[test]
fn bounded_images_pass_every_compactness_criterion() {
    let cfg = BatteryConfig::new(3);
    for map in [SymbolMap::constant(&[0.3]).unwrap(), SymbolMap::dilation(0.9, 1).unwrap()] {
        for space in [Space::Bergman { alpha: 0.0 }, Space::Hardy] {
            let prof = profile(&map, space, 3);
            for psi in builtin_psi() {
                let b = run_battery(&map, &psi, &prof, &cfg).unwrap();
                for r in b.reports.iter().filter(|r| r.criterion.is_compactness()) {
                    assert_eq!(r.verdict, Verdict::Pass, "{} {} {:?}", map.label(), psi.label(), r.criterion);
                }
                assert_eq!(b.inconsistencies(), 0);
                assert_eq!(b.exit_code(), exit::OK);
            }
        }
    }
}

#[test]
fn identity_is_bounded_not_compact() {
    let map = SymbolMap::identity(1);
    let psi = OrliczFunction::power(2.0).unwrap();
    let b = run_battery(&map, &psi, &profile(&map, Space::Bergman { alpha: 0.0 }, 5), &BatteryConfig::new(5)).unwrap();
    assert_eq!(b.verdict(CriterionId::PsiCarlesonBigOh), Some(Verdict::Pass));
    for r in b.reports.iter().filter(|r| r.criterion.is_compactness()) {
        assert_ne!(r.verdict, Verdict::Pass, "{:?}", r.criterion);
    }
    assert_eq!(b.verdict(CriterionId::HInftyCompact), Some(Verdict::Fail));
    assert_eq!(b.exit_code(), exit::OK);
}

#[test]
fn lens_under_exponential_growth() {
    let psi = OrliczFunction::exp_power(1.0, 1.0).unwrap();
    let map = SymbolMap::lens(0.5).unwrap();
    for alpha in [0.0, 1.0, 2.0] {
        let b = run_battery(&map, &psi, &profile(&map, Space::Bergman { alpha }, 9), &BatteryConfig::new(9)).unwrap();
        let ratio = b.report(CriterionId::BoundaryRatioAlpha).unwrap();
        assert_eq!(ratio.verdict, Verdict::Fail);
        assert!((ratio.margin - 0.5).abs() <= 0.02, "{}", ratio.margin);
        assert_eq!(b.verdict(CriterionId::ClassicalAngularRatio), Some(Verdict::Pass));
        assert_eq!(b.verdict(CriterionId::PsiCarlesonLittleOh), Some(Verdict::Fail));
        assert_eq!(b.verdict(CriterionId::KoranyiApertureVerdict), Some(Verdict::Fail));
        let separation = b
            .consistency
            .iter()
            .find(|r| r.check == ConsistencyCheck::LensSeparation)
            .unwrap();
        assert_eq!(separation.status, ImplicationStatus::Consistent);
        assert_eq!(b.exit_code(), exit::OK);
    }
}

#[test]
fn lens_under_powers_is_compact() {
    let psi = OrliczFunction::power(2.0).unwrap();
    let map = SymbolMap::lens(0.5).unwrap();
    for space in [Space::Bergman { alpha: 0.0 }, Space::Hardy] {
        let b = run_battery(&map, &psi, &profile(&map, space, 2), &BatteryConfig::new(2)).unwrap();
        for id in [
            CriterionId::PsiCarlesonLittleOh,
            CriterionId::BoundaryRatioAlpha,
            CriterionId::ClassicalAngularRatio,
            CriterionId::KoranyiApertureVerdict,
        ] {
            assert_eq!(b.verdict(id), Some(Verdict::Pass), "{id:?}");
        }
        assert_eq!(b.inconsistencies(), 0);
    }
}

#[test]
fn every_report_recomputes() {
    let map = SymbolMap::lens(1.0 / 3.0).unwrap();
    let psi = OrliczFunction::log_exp(1.0, 2.0).unwrap();
    let b = run_battery(&map, &psi, &profile(&map, Space::Hardy, 4), &BatteryConfig::new(4)).unwrap();
    assert_eq!(b.reports.len(), 9);
    for r in &b.reports {
        let out = r.recompute();
        assert_eq!(out.verdict, r.verdict);
        assert_eq!(out.margin.to_bits(), r.margin.to_bits());
    }
    let ids: Vec<CriterionId> = b.reports.iter().map(|r| r.criterion).collect();
    assert_eq!(ids, CriterionId::ALL.to_vec());
}

#[test]
fn mismatched_exponent_is_rejected() {
    let map = SymbolMap::identity(1);
    let prof = profile(&map, Space::Hardy, 1);
    let psi = OrliczFunction::power(2.0).unwrap();
    let err = psi_carleson_fit(&prof, &psi, Some(2.0), CarlesonMode::BigOh, &[1.0]).unwrap_err();
    assert!(matches!(err, Error::ProfileMismatch(_)));
    let other = SymbolMap::dilation(0.5, 1).unwrap();
    assert!(run_battery(&other, &psi, &prof, &BatteryConfig::new(1)).is_err());
}
