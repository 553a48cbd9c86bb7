use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use num_complex::Complex64;
use wnc::macsim::run_scenario;
use wnc::packet::{compute_crc, xor_combine};
use wnc::phy::{
    build_frame, estimate_channel, search_optimal_labeling, Constellation, GridPlan, LdpcCode, Modem, Objective,
    SoftDemapper,
};
use wnc::scenario::Scenario;

fn packet(c: &mut Criterion) {
    let a: Vec<u8> = (0..1024u32).map(|i| (i * 31 % 251) as u8).collect();
    let b: Vec<u8> = (0..1024u32).map(|i| (i * 17 % 241) as u8).collect();
    let mut g = c.benchmark_group("packet");
    g.throughput(Throughput::Bytes(1024));
    g.bench_function("crc32_1k", |bench| bench.iter(|| compute_crc(black_box(&a))));
    g.bench_function("xor_1k", |bench| bench.iter(|| xor_combine(black_box(&a), black_box(&b)).unwrap()));
    g.finish();
}

fn demap(c: &mut Criterion) {
    let relay = Constellation::gray(8).unwrap();
    let d = SoftDemapper::new(&relay, 0b100);
    let ys: Vec<Complex64> = (0..4096).map(|i| Complex64::from_polar(0.9, i as f64 * 0.013)).collect();
    let mut g = c.benchmark_group("demap");
    g.throughput(Throughput::Elements(ys.len() as u64));
    g.bench_function("subset_llr_8psk", |bench| {
        let mut out = Vec::with_capacity(ys.len() * 2);
        bench.iter(|| {
            out.clear();
            for (i, &y) in ys.iter().enumerate() {
                d.llrs(y, (i & 1) << 2, 0.3, &mut out);
            }
            black_box(out.len())
        })
    });
    g.finish();
}

fn ldpc(c: &mut Criterion) {
    let mut g = c.benchmark_group("ldpc");
    for n in [1152usize, 9216] {
        let code = LdpcCode::new(n, 1).unwrap();
        let info: Vec<u8> = (0..code.k()).map(|i| (i * 7 % 3 % 2) as u8).collect();
        let cw = code.encode(&info).unwrap();
        // Every eighth bit weakened and every 29th flipped.
        let llr: Vec<f64> = cw
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let s = if b == 0 { 1.0 } else { -1.0 };
                if i % 29 == 0 {
                    -0.8 * s
                } else if i % 8 == 0 {
                    0.3 * s
                } else {
                    2.0 * s
                }
            })
            .collect();
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("encode", n), &info, |bench, u| bench.iter(|| code.encode(u).unwrap()));
        g.bench_with_input(BenchmarkId::new("decode", n), &llr, |bench, l| bench.iter(|| code.decode(l, 50).unwrap()));
    }
    g.finish();
}

fn ofdm(c: &mut Criterion) {
    let plan = GridPlan::v1();
    let modem = Modem::default();
    let data: Vec<Complex64> = (0..plan.data_cells().len())
        .map(|i| Complex64::from_polar(1.0, (i % 4) as f64 * std::f64::consts::FRAC_PI_2))
        .collect();
    let grid = build_frame(&data, &plan).unwrap();
    let samples = modem.modulate(&grid);
    let mut g = c.benchmark_group("ofdm_frame");
    g.sample_size(30);
    g.bench_function("modulate", |bench| bench.iter(|| modem.modulate(black_box(&grid))));
    g.bench_function("demodulate", |bench| bench.iter(|| modem.demodulate(black_box(&samples)).unwrap()));
    g.bench_function("estimate", |bench| bench.iter(|| estimate_channel(black_box(&grid), &plan)));
    g.finish();
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("labeling");
    g.sample_size(10);
    g.bench_function("8psk_split_1_2", |bench| {
        bench.iter(|| search_optimal_labeling(8, (1, 2), Objective::SinkLeximax).unwrap())
    });
    g.finish();
}

fn macsim(c: &mut Criterion) {
    let mut g = c.benchmark_group("macsim");
    g.sample_size(10);
    for (name, kind) in [("csma_nc_20s", "csma"), ("tdma_nc_20s", "tdma")] {
        let sc = Scenario::from_toml_with_overrides("", &[format!("mac.kind={kind}"), "mac.airtime_us=8000".into()])
            .unwrap();
        g.bench_function(name, |bench| bench.iter(|| run_scenario(&sc).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, packet, demap, ldpc, ofdm, search, macsim);
criterion_main!(benches);
