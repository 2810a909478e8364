use ganspect::data::{normalize, sliding_windows};
use ganspect::gan::{adversarial_train, GanConfig};
use ganspect::synth::{generate, SynthConfig};

#[test]
#[ignore]
fn one_epoch_timing() {
    let fixture = generate(&SynthConfig::default()).unwrap();
    let (norm, _) = normalize(&fixture.series).unwrap();
    let ws = sliding_windows(&norm, 60, 1).unwrap();
    eprintln!("windows: {}", ws.len());
    let cfg = GanConfig { epochs: 1, ..GanConfig::default() };
    let t0 = std::time::Instant::now();
    let (_, stats) = adversarial_train(&ws, &cfg).unwrap();
    eprintln!("epoch time: {:.2}s stats: {:?}", t0.elapsed().as_secs_f64(), stats.epochs);
}
