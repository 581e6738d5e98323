use thermoform::pressure::pressure_at_scale;
use thermoform::transfer::{build_operator, leading_eigen};
use thermoform::{Collection, DecompositionConfig, EigenDataF32, MapSystemF32, PotentialF32, PressureEstimateF32};

#[test]
fn doubling_pressure_in_f32() {
    let map = MapSystemF32::doubling();
    let p: PressureEstimateF32 =
        pressure_at_scale(&map, &PotentialF32::Zero, &Collection::Full, 1.0 / 32.0, 10).unwrap();
    assert!((p.rate - std::f32::consts::LN_2).abs() < 1e-4);
}

#[test]
fn transfer_eigenvalue_in_f32() {
    let map = MapSystemF32::doubling();
    let op = build_operator(&map, &PotentialF32::Geometric { t: 1.0 }, 256).unwrap();
    let e: EigenDataF32 = leading_eigen(&op, 1e-6, 1000).unwrap();
    assert!((e.lambda - 1.0).abs() < 1e-5);
}

#[test]
fn decomposition_in_f32() {
    let map = MapSystemF32::manneville_pomeau(0.5).unwrap();
    let cfg = DecompositionConfig::<f32>::new(0.9).unwrap();
    let seg = thermoform::OrbitSegment::new(0.3f32, 20).unwrap();
    let d = thermoform::decomposition::decompose(&map, &cfg, seg).unwrap();
    assert_eq!(d.g_len + d.s_len, 20);
}
