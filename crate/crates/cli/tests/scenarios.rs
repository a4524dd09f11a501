use std::path::Path;
use std::process::Command;

use fiberqed_cli::config::GapSelection;
use fiberqed_cli::{run, CliError, Config, ConfigError};

fn small() -> Config {
    let mut c = Config::default();
    c.modes.dispersion_points = 51;
    c.modes.profile_points = 21;
    c.spectrum.atoms = 5;
    c.spectrum.spacing_points = 21;
    c.line.atoms = vec![2, 3];
    c.line.line_atoms = vec![3];
    c.line.detuning_points = 101;
    c.steadystate.atoms = vec![1, 2];
    c.steadystate.rabi_points = 3;
    c.wigner.atoms = vec![1];
    c.wigner.rabi_in_gamma = vec![0.5];
    c.wigner.angles = 16;
    c.wigner.s_points = 41;
    c.wigner.x_points = 65;
    c.gaps.total_sites = 4;
    c.gaps.atoms = 3;
    c.gaps.wigner_rabi_in_gamma = None;
    c
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn parse_errors_carry_line_and_column() {
    let err = Config::from_toml("[chain]\natoms = 3\nspacing_in_lambda = \"wide\"\n").unwrap_err();
    match err {
        ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (3, 21)),
        other => panic!("unexpected {other}"),
    }
    let err = Config::from_toml("[drive]\nrabi = 1.0\n").unwrap_err();
    assert!(err.to_string().contains("unknown field"), "{err}");
}

#[test]
fn invalid_fields_are_named() {
    let cases = [
        ("[fiber]\nradius_in_lambda = -0.2\n", "fiber"),
        ("[wigner]\nangles = 8\n", "wigner.angles"),
        ("[wigner]\ns_points = 40\n", "wigner"),
        ("[steadystate]\natoms = [13]\n", "steadystate.atoms"),
        ("[gaps]\ntotal_sites = 3\natoms = 4\n", "gaps.atoms"),
        ("scenario = \"figures\"\n", "scenario"),
    ];
    for (text, field) in cases {
        match Config::from_toml(text).unwrap_err() {
            ConfigError::Field { field: f, .. } => assert_eq!(f, field, "{text}"),
            other => panic!("{text}: {other}"),
        }
    }
}

#[test]
fn defaults_round_trip_through_toml() {
    let c = Config::default();
    let text = toml::to_string(&c).unwrap();
    assert_eq!(Config::from_toml(&text).unwrap(), c);
}

#[test]
fn unknown_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = run(&small(), Some("nope"), dir.path(), None).unwrap_err();
    assert!(matches!(err, CliError::Config(ConfigError::Field { .. })));
}

#[test]
fn all_scenarios_write_the_documented_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let results = run(&small(), Some("all"), out, Some(7)).unwrap();

    assert_eq!(header(&out.join("modes/dispersion.csv")), "beta_over_k,characteristic");
    assert_eq!(header(&out.join("modes/profile.csv")), "r_in_lambda,e_r_im,e_phi_re,e_z_re");
    assert_eq!(rows(&out.join("modes/kernels.csv")).len(), 15 * 15);
    assert_eq!(header(&out.join("spectrum/rates.csv")), "spacing_in_lambda,n,gamma_n");
    assert_eq!(rows(&out.join("spectrum/rates.csv")).len(), 21 * 5);
    assert_eq!(header(&out.join("spectrum/spin_wave.csv")), "spacing_in_lambda,gamma_psi,gamma_max");
    assert_eq!(header(&out.join("spectrum/matching.csv")), "order,spacing_in_lambda");
    assert_eq!(header(&out.join("line/spectrum_N3.csv")), "detuning_in_gamma,right,left,unguided");
    assert_eq!(rows(&out.join("line/splitting.csv")).len(), 2);
    let ss = rows(&out.join("steadystate/observables.csv"));
    assert_eq!(ss.len(), 2 * 3);
    assert_eq!(
        header(&out.join("steadystate/observables.csv")),
        "atoms,rabi_in_gamma,right,left,unguided,beta,chirality,right_per_atom_per_rabi2,right_over_single,residual"
    );
    let w = out.join("wigner/N1_rabi0p5");
    assert_eq!(header(&w.join("wigner.csv")), "x,p,w");
    assert_eq!(rows(&w.join("wigner.csv")).len(), 65 * 65);
    assert_eq!(header(&w.join("sinogram.csv")), "alpha,x,density");
    assert_eq!(rows(&w.join("sinogram.csv")).len(), 16 * 65);
    assert_eq!(header(&w.join("scgf.csv")), "alpha,s,theta,converged");
    assert_eq!(rows(&out.join("wigner/summary.csv")).len(), 1);
    let gaps = rows(&out.join("gaps/configurations.csv"));
    // full chain plus the two single-gap placements of 3 atoms in 4 sites
    let sites: Vec<&str> = gaps.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(sites, ["0;1;2", "0;1;3", "0;2;3"]);
    assert_eq!(gaps[0][9 - 1], "NaN");

    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "all");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["wigner"]["angles"], 16);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "steadystate/observables.csv" && f["rows"] == 6));
    for f in files {
        assert!(out.join(f["path"].as_str().unwrap()).exists());
    }

    let ss = results.steadystate.unwrap();
    for row in &ss {
        assert!(row.residual < 1e-9);
        assert!(row.beta > 0.0 && row.beta < 1.0);
    }
    let wig = &results.wigner.unwrap()[0];
    assert!((wig.integral - 1.0).abs() < 1e-2, "{}", wig.integral);
    assert_eq!(wig.unconverged, 0);
}

#[test]
fn gap_selection_all_enumerates_every_placement() {
    let mut c = small();
    c.gaps.selection = GapSelection::All;
    let dir = tempfile::tempdir().unwrap();
    let rows = run(&c, Some("gaps"), dir.path(), None).unwrap().gaps.unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.single_gap).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.full).count(), 2);
    // translated full chains emit identically
    let full: Vec<_> = rows.iter().filter(|r| r.full).collect();
    assert!((full[0].right - full[1].right).abs() < 1e-12 * full[0].right);
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fiberqed")).args(args).output().unwrap()
}

#[test]
fn binary_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, toml::to_string(&small()).unwrap()).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = binary(&[
            "--config",
            config.to_str().unwrap(),
            "--scenario",
            "wigner",
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out.join("wigner/N1_rabi0p5/wigner.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn binary_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[wigner]\nangles = 4\n").unwrap();
    let o = binary(&["--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("wigner.angles"));
}
