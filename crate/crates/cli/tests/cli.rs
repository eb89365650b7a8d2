use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use tritree::marketdata::read_surface;
use tritree::report::{CalibrationReport, ImpliedReport};
use tritree::{Convention, NaturalParams, PricingModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tritree"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Distinct, increasing calendar dates without pulling in a date crate.
fn date(i: usize) -> String {
    format!("{}-{:02}-{:02}", 2000 + i / 300, (i % 300) / 25 + 1, i % 25 + 1)
}

fn write_prices(dir: &Path, prices: &[f64]) -> PathBuf {
    let mut body = String::from("date,adj_close\n");
    for (i, p) in prices.iter().enumerate() {
        body.push_str(&format!("{},{p}\n", date(i)));
    }
    let path = dir.join("prices.csv");
    fs::write(&path, body).unwrap();
    path
}

/// 1001 closes whose 1000 arithmetic returns are N(0, 0.02).
fn normal_prices(seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = Normal::new(0.0, 0.02).unwrap();
    let mut prices = vec![100.0];
    for _ in 0..1000 {
        let last = *prices.last().unwrap();
        prices.push(last * (1.0 + n.sample(&mut rng)));
    }
    prices
}

fn calibrated(dir: &Path, prices: &Path) -> CalibrationReport {
    let out = dir.join("cal");
    let o = run(&["calibrate", "--prices", prices.to_str().unwrap(), "--out", out.to_str().unwrap(), "--rf-daily", "2e-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap()
}

fn params_of(r: &CalibrationReport) -> NaturalParams<f64> {
    let p = &r.parameters;
    NaturalParams {
        p_up: p.p_up,
        p_mid: p.p_mid,
        p_down: p.p_down,
        mu: p.mu,
        sigma: p.sigma,
        rate: p.rate_daily.unwrap(),
        dt: 1.0,
    }
}

#[test]
fn calibrate_on_seeded_normal_returns() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(1));
    let r = calibrated(dir.path(), &prices);
    let p = &r.parameters;
    assert!((p.p_up + p.p_mid + p.p_down - 1.0).abs() < 1e-12);
    assert!((p.sigma - 0.02).abs() < 2e-3, "sigma = {}", p.sigma);
    assert!(p.mu.abs() < 3e-3);
    assert_eq!(r.window_len, 1000);
    assert_eq!(r.threshold_sweep.len(), 4);
    assert_eq!(r.alpha, 0.001);
    assert_eq!(r.extremes.beta, 0.01);
    assert!(r.extremes.cvar_lower < 0.0 && r.extremes.cvar_upper > 0.0);
    assert_eq!(p.spot, *normal_prices(1).last().unwrap());
}

#[test]
fn calibration_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(2));
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&["calibrate", "--prices", prices.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        texts.push(fs::read(out.join("calibration.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn constant_prices_fail_with_degenerate_volatility() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &[50.0; 300]);
    let o = run(&["calibrate", "--prices", prices.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("degenerate volatility"), "{}", stderr(&o));
    assert!(!dir.path().join("calibration.json").exists());
}

#[test]
fn config_file_values_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(3));
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "prices = {:?}\nout = {:?}\nalpha = 0.05\nbeta = 0.05\nconvention = \"log\"\nlabel = \"synthetic\"\n",
            prices, out
        ),
    )
    .unwrap();
    let o = run(&["calibrate", "--config", cfg.to_str().unwrap(), "--alpha", "0.01"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: CalibrationReport = serde_json::from_str(&fs::read_to_string(out.join("calibration.json")).unwrap()).unwrap();
    assert_eq!(r.alpha, 0.01);
    assert_eq!(r.extremes.beta, 0.05);
    assert_eq!(r.convention, Convention::Log);
    assert_eq!(r.label.as_deref(), Some("synthetic"));

    fs::write(&cfg, "alhpa = 0.05\n").unwrap();
    let bad = run(&["calibrate", "--config", cfg.to_str().unwrap(), "--prices", prices.to_str().unwrap()]);
    assert!(!bad.status.success());
}

#[test]
fn price_grid_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(4));
    let r = calibrated(dir.path(), &prices);
    let out = dir.path().join("grid");
    let o = run(&[
        "price",
        "--prices",
        prices.to_str().unwrap(),
        "--rf-daily",
        "2e-4",
        "--out",
        out.to_str().unwrap(),
        "--strikes",
        "0,80,95,100,105,120",
        "--steps",
        "1,10,30",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = PricingModel {
        spot: r.parameters.spot,
        convention: Convention::Arithmetic,
    };
    let params = params_of(&r);
    let text = fs::read_to_string(out.join("prices.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,K,M,price,status"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 18);
    let mut prev: Option<(usize, f64)> = None;
    for row in rows {
        let steps: usize = row[0].parse().unwrap();
        let k: f64 = row[1].parse().unwrap();
        let price: f64 = row[3].parse().unwrap();
        assert_eq!(row[4], "ok");
        assert_eq!(price, model.call_price(&params, steps, k).unwrap());
        if k == 0.0 {
            assert!((price - model.spot).abs() < 1e-9 * model.spot);
        }
        if let Some((n, last)) = prev {
            if n == steps {
                assert!(price <= last);
            }
        }
        prev = Some((steps, price));
    }
}

fn write_chain(dir: &Path, rows: &[(usize, f64, f64)]) -> PathBuf {
    let mut body = String::from("expiry_steps,strike,price\n");
    for (n, k, p) in rows {
        body.push_str(&format!("{n},{k},{p}\n"));
    }
    let path = dir.join("chain.csv");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn model_chain_gives_flat_volatility_surface() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(5));
    let r = calibrated(dir.path(), &prices);
    let params = params_of(&r);
    let model = PricingModel {
        spot: r.parameters.spot,
        convention: Convention::Arithmetic,
    };
    let mut rows = Vec::new();
    for n in [5, 15, 30] {
        for m in [0.95, 1.0, 1.05] {
            let k = (model.spot * m * 100.0).round() / 100.0;
            rows.push((n, k, model.call_price(&params, n, k).unwrap()));
        }
    }
    let chain = write_chain(dir.path(), &rows);
    let out = dir.path().join("imp");
    let o = run(&[
        "implied",
        "--prices",
        prices.to_str().unwrap(),
        "--rf-daily",
        "2e-4",
        "--chain",
        chain.to_str().unwrap(),
        "--params",
        "sigma",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = read_surface(out.join("implied_sigma.csv")).unwrap();
    for v in &grid.values {
        assert!((v - params.sigma).abs() < 1e-3, "{v} vs {}", params.sigma);
    }
    assert!(out.join("implied_sigma_matrix.csv").exists());
    let rep: ImpliedReport = serde_json::from_str(&fs::read_to_string(out.join("implied_report.json")).unwrap()).unwrap();
    assert_eq!(rep.quotes, 9);
    assert_eq!(rep.surfaces.len(), 1);
    assert_eq!(rep.surfaces[0].inverted, 9);
    assert_eq!(rep.surfaces[0].file.as_deref(), Some("implied_sigma.csv"));
    assert!(rep.surfaces[0].points.iter().all(|p| p.objective < 1e-12));
}

#[test]
fn empty_parameter_list_writes_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(6));
    let chain = write_chain(dir.path(), &[(10, 100.0, 3.0)]);
    let out = dir.path().join("imp");
    let o = run(&[
        "implied",
        "--prices",
        prices.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: ImpliedReport = serde_json::from_str(&fs::read_to_string(out.join("implied_report.json")).unwrap()).unwrap();
    assert!(rep.surfaces.is_empty());
    let surfaces = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("implied_sigma"))
        .count();
    assert_eq!(surfaces, 0);
}

#[test]
fn corrupt_chain_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(7));
    let chain = dir.path().join("chain.csv");
    fs::write(&chain, "expiry_steps,strike,price\n10,100,3.0\n12,1O5,2.5\n").unwrap();
    let o = run(&[
        "implied",
        "--prices",
        prices.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--params",
        "sigma",
        "--out",
        dir.path().join("imp").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("row 3") && err.contains("1O5"), "{err}");
}

#[test]
fn unknown_parameter_name_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path(), &normal_prices(8));
    let chain = write_chain(dir.path(), &[(10, 100.0, 3.0)]);
    let o = run(&[
        "implied",
        "--prices",
        prices.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--params",
        "sigma,theta",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown parameter"));
}
