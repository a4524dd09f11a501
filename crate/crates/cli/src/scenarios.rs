//! Scenario runners: each computes one figure-analogue data set, writes its
//! CSV tables and returns the numbers for the manifest.

use fiberqed::couplings::{assemble, chain_guided_rates, CouplingKernels};
use fiberqed::fiber::{dispersion_scan, solve_he11, FiberMode, GuidedRates};
use fiberqed::geometry::{AtomChain, WAVENUMBER};
use fiberqed::lindblad::{build_liouvillian, steady_state};
use fiberqed::spectral::{decay_spectrum, matching_lattice_constants, spacing_sweep, SpacingPoint};
use fiberqed::tomography::{reconstruct, right_jump_operator, Tomogram};
use fiberqed::weak_drive::{default_detuning_grid, emission_line, linspace, ChannelRates, LineScan};
use serde::Serialize;

use crate::config::{Config, GapSelection};
use crate::error::{CliError, Context};
use crate::gaps::{enumerate_gap_configs, is_full, is_single_gap, label, single_gap_configs};
use crate::output::{tag, Sink, Table};

/// Shared inputs of one run.
pub struct Setup<'a> {
    pub config: &'a Config,
    pub mode: FiberMode,
    /// Single-atom guided rates at the configured distance and dipole.
    pub rates: GuidedRates,
    pub seed: Option<u64>,
}

impl<'a> Setup<'a> {
    pub fn new(config: &'a Config, seed: Option<u64>) -> Result<Self, CliError> {
        let spec = config.fiber_spec()?;
        let mode = solve_he11(&spec).context("modes")?;
        let chain = config.chain(Some(1))?;
        let rates = chain_guided_rates(&chain, &mode, config.calibration.calibration()).context("modes")?;
        Ok(Self {
            config,
            mode,
            rates,
            seed,
        })
    }

    pub fn kernels(&self, chain: &AtomChain) -> Result<CouplingKernels, CliError> {
        assemble(chain, &self.mode, self.rates).context("couplings")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModesSummary {
    pub beta_over_k: f64,
    pub effective_index: f64,
    pub guided_wavelength_in_lambda: f64,
    pub group_index: f64,
    pub v_number: f64,
    pub single_atom_right: f64,
    pub single_atom_left: f64,
    pub single_atom_beta: f64,
    pub single_atom_chirality: f64,
}

pub fn run_modes(setup: &Setup, sink: &mut Sink) -> Result<ModesSummary, CliError> {
    let cfg = setup.config;
    let spec = cfg.fiber_spec()?;
    let mut disp = Table::new(&["beta_over_k", "characteristic"]);
    for (b, f) in dispersion_scan(&spec, cfg.modes.dispersion_points) {
        disp.row(vec![b.into(), f.into()]);
    }
    sink.write("modes/dispersion.csv", &disp)?;

    let mut prof = Table::new(&["r_in_lambda", "e_r_im", "e_phi_re", "e_z_re"]);
    let r_max = cfg.modes.profile_extent_in_radius * spec.radius;
    for r in linspace(r_max / cfg.modes.profile_points as f64, r_max, cfg.modes.profile_points) {
        let p = setup.mode.profile(r);
        prof.row(vec![r.into(), p.e_r.im.into(), p.e_phi.re.into(), p.e_z.re.into()]);
    }
    sink.write("modes/profile.csv", &prof)?;

    let chain = cfg.chain(None)?;
    let k = setup.kernels(&chain)?;
    let z = chain.positions();
    let mut t = Table::new(&[
        "i", "j", "z_i_in_lambda", "z_j_in_lambda", "v_r_re", "v_r_im", "v_l_re", "v_l_im", "v_u_re", "v_u_im", "g_r_re",
        "g_r_im", "g_l_re", "g_l_im", "g_u_re", "g_u_im",
    ]);
    for i in 0..chain.len() {
        for j in 0..chain.len() {
            let mut row = vec![i.into(), j.into(), z[i].into(), z[j].into()];
            for m in [&k.v_r, &k.v_l, &k.v_u, &k.g_r, &k.g_l, &k.g_u] {
                row.push(m[(i, j)].re.into());
                row.push(m[(i, j)].im.into());
            }
            t.row(row);
        }
    }
    sink.write("modes/kernels.csv", &t)?;
    let r = setup.rates;
    let unguided = fiberqed::geometry::GAMMA;
    Ok(ModesSummary {
        beta_over_k: setup.mode.beta / WAVENUMBER,
        effective_index: setup.mode.effective_index(),
        guided_wavelength_in_lambda: setup.mode.guided_wavelength(),
        group_index: setup.mode.beta_prime,
        v_number: spec.v_number(),
        single_atom_right: r.right,
        single_atom_left: r.left,
        single_atom_beta: r.total() / (r.total() + unguided),
        single_atom_chirality: r.chirality(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub atoms: usize,
    pub matching_spacings_in_lambda: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<SpacingPoint>,
}

pub fn run_spectrum(setup: &Setup, sink: &mut Sink) -> Result<SpectrumSummary, CliError> {
    let cfg = setup.config;
    let sp = &cfg.spectrum;
    let template = cfg.chain(Some(sp.atoms))?;
    let drive = cfg.drive(cfg.drive.rabi_in_gamma, cfg.drive.detuning_in_gamma)?;
    let spacings = linspace(sp.spacing_min_in_lambda, sp.spacing_max_in_lambda, sp.spacing_points);
    let points = spacing_sweep(&setup.mode, setup.rates, &template, &drive, &spacings).context("spectrum")?;
    let mut rates = Table::new(&["spacing_in_lambda", "n", "gamma_n"]);
    let mut psi = Table::new(&["spacing_in_lambda", "gamma_psi", "gamma_max"]);
    for p in &points {
        for (n, g) in p.gamma.iter().enumerate() {
            rates.row(vec![p.spacing.into(), n.into(), (*g).into()]);
        }
        let max = p.gamma.iter().cloned().fold(f64::MIN, f64::max);
        psi.row(vec![p.spacing.into(), p.spin_wave_rate.into(), max.into()]);
    }
    sink.write("spectrum/rates.csv", &rates)?;
    sink.write("spectrum/spin_wave.csv", &psi)?;
    let angle = cfg.drive.laser_angle_in_rad;
    let range = (sp.spacing_min_in_lambda, sp.spacing_max_in_lambda);
    let matching = matching_lattice_constants(&setup.mode, angle, sp.matching_orders, range);
    let mut m = Table::new(&["order", "spacing_in_lambda"]);
    let denom = angle.cos() + setup.mode.beta / WAVENUMBER;
    for a in &matching {
        m.row(vec![((a * denom).round() as i64).into(), (*a).into()]);
    }
    sink.write("spectrum/matching.csv", &m)?;
    Ok(SpectrumSummary {
        atoms: sp.atoms,
        matching_spacings_in_lambda: matching,
        points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingRow {
    pub atoms: usize,
    pub splitting_in_gamma: Option<f64>,
    pub peak_right: f64,
    /// Peak in units of `N Ω²/γ` (the lines are computed at Ω = γ).
    pub peak_right_per_atom: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Γ_R at the grid ends relative to the peak.
    pub boundary_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSummary {
    pub splitting: Vec<SplittingRow>,
    #[serde(skip)]
    pub lines: Vec<(usize, LineScan)>,
}

fn line_for(setup: &Setup, atoms: usize) -> Result<(LineScan, Vec<f64>), CliError> {
    let cfg = setup.config;
    let chain = cfg.chain(Some(atoms))?;
    let k = setup.kernels(&chain)?;
    let v = decay_spectrum(&k).context("line")?.v;
    let grid = match cfg.line.detuning_half_width_in_gamma {
        Some(w) => linspace(-w, w, cfg.line.detuning_points),
        None => default_detuning_grid(&v, cfg.line.detuning_points),
    };
    let drive = cfg.drive(1.0, 0.0)?;
    Ok((emission_line(&k, &chain, &drive, &grid).context("line")?, v))
}

pub fn run_line(setup: &Setup, sink: &mut Sink) -> Result<LineSummary, CliError> {
    let cfg = setup.config;
    let mut lines = Vec::new();
    for &n in &cfg.line.line_atoms {
        let (scan, _) = line_for(setup, n)?;
        let mut t = Table::new(&["detuning_in_gamma", "right", "left", "unguided"]);
        for (d, r) in scan.detunings.iter().zip(&scan.rates) {
            t.row(vec![(*d).into(), r.right.into(), r.left.into(), r.unguided.into()]);
        }
        sink.write(&format!("line/spectrum_N{n}.csv"), &t)?;
        lines.push((n, scan));
    }
    let mut rows = Vec::new();
    let mut t = Table::new(&["atoms", "splitting_in_gamma", "peak_right", "peak_right_per_atom", "v_min", "v_max", "boundary_fraction"]);
    for &n in &cfg.line.atoms {
        let (scan, v) = line_for(setup, n)?;
        let peak = scan.peak();
        let right = scan.right();
        let boundary = right[0].max(right[right.len() - 1]) / peak;
        let row = SplittingRow {
            atoms: n,
            splitting_in_gamma: scan.splitting,
            peak_right: peak,
            peak_right_per_atom: peak / n as f64,
            v_min: v[0],
            v_max: v[v.len() - 1],
            boundary_fraction: boundary,
        };
        t.row(vec![
            n.into(),
            row.splitting_in_gamma.unwrap_or(f64::NAN).into(),
            peak.into(),
            row.peak_right_per_atom.into(),
            row.v_min.into(),
            row.v_max.into(),
            boundary.into(),
        ]);
        rows.push(row);
    }
    sink.write("line/splitting.csv", &t)?;
    Ok(LineSummary { splitting: rows, lines })
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyRow {
    pub atoms: usize,
    pub rabi_in_gamma: f64,
    pub right: f64,
    pub left: f64,
    pub unguided: f64,
    pub beta: f64,
    pub chirality: f64,
    /// `Γ_R / (N Γ_R^{N=1})` at the same drive.
    pub right_over_single: f64,
    pub residual: f64,
}

impl SteadyRow {
    fn new(atoms: usize, rabi: f64, e: ChannelRates, single: f64, residual: f64) -> Self {
        Self {
            atoms,
            rabi_in_gamma: rabi,
            right: e.right,
            left: e.left,
            unguided: e.unguided,
            beta: e.beta(),
            chirality: e.chirality(),
            right_over_single: e.right / (atoms as f64 * single),
            residual,
        }
    }

    /// `Γ_R / (N Ω²)`.
    pub fn right_per_atom(&self) -> f64 {
        self.right / (self.atoms as f64 * self.rabi_in_gamma * self.rabi_in_gamma)
    }
}

pub fn run_steadystate(setup: &Setup, sink: &mut Sink) -> Result<Vec<SteadyRow>, CliError> {
    let cfg = setup.config;
    let ss = &cfg.steadystate;
    let emission = |n: usize, rabi: f64| -> Result<(ChannelRates, f64), CliError> {
        let chain = cfg.chain(Some(n))?;
        let k = setup.kernels(&chain)?;
        let drive = cfg.drive(rabi, ss.detuning_in_gamma)?;
        let state = steady_state(&build_liouvillian(&k, &chain, &drive).context("steadystate")?).context("steadystate")?;
        Ok((state.emission(&k), state.residual))
    };
    let grid = ss.rabi_grid();
    let single = grid.iter().map(|&r| Ok(emission(1, r)?.0.right)).collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::new();
    for &n in &ss.atoms {
        for (&rabi, &one) in grid.iter().zip(&single) {
            let (e, residual) = emission(n, rabi)?;
            rows.push(SteadyRow::new(n, rabi, e, one, residual));
        }
    }
    let mut t = Table::new(&[
        "atoms",
        "rabi_in_gamma",
        "right",
        "left",
        "unguided",
        "beta",
        "chirality",
        "right_per_atom_per_rabi2",
        "right_over_single",
        "residual",
    ]);
    for r in &rows {
        t.row(vec![
            r.atoms.into(),
            r.rabi_in_gamma.into(),
            r.right.into(),
            r.left.into(),
            r.unguided.into(),
            r.beta.into(),
            r.chirality.into(),
            r.right_per_atom().into(),
            r.right_over_single.into(),
            r.residual.into(),
        ]);
    }
    sink.write("steadystate/observables.csv", &t)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerRow {
    pub label: String,
    pub atoms: usize,
    pub rabi_in_gamma: f64,
    pub negativity: f64,
    pub integral: f64,
    pub boundary_ratio: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub consistency_relative: f64,
    pub max_excess_kurtosis: f64,
    pub s_max: f64,
    pub x_extent: f64,
    pub unconverged: usize,
}

/// Tomography of one chain; writes `<dir>/scgf.csv`, `sinogram.csv`, `wigner.csv`.
fn tomography(
    setup: &Setup,
    sink: &mut Sink,
    chain: &AtomChain,
    rabi: f64,
    detuning: f64,
    dir: &str,
    label: String,
) -> Result<(WignerRow, Tomogram), CliError> {
    let cfg = setup.config;
    let k = setup.kernels(chain)?;
    let drive = cfg.drive(rabi, detuning)?;
    let l = build_liouvillian(&k, chain, &drive).context("wigner")?;
    let j = right_jump_operator(&k, chain, &setup.mode).context("wigner")?;
    let w = &cfg.wigner;
    let tomo = reconstruct(&l, &j, &w.grids(), &w.eigen(setup.seed), &w.fbp()).context("wigner")?;

    let mut scgf = Table::new(&["alpha", "s", "theta", "converged"]);
    for c in &tomo.sinogram.curves {
        for ((s, th), ok) in c.s.iter().zip(&c.theta).zip(&c.converged) {
            scgf.row(vec![c.alpha.into(), (*s).into(), (*th).into(), (*ok).into()]);
        }
    }
    sink.write(&format!("{dir}/scgf.csv"), &scgf)?;
    let mut sino = Table::new(&["alpha", "x", "density"]);
    for m in &tomo.sinogram.marginals {
        for (x, p) in m.x.iter().zip(&m.density) {
            sino.row(vec![m.alpha.into(), (*x).into(), (*p).into()]);
        }
    }
    sink.write(&format!("{dir}/sinogram.csv"), &sino)?;
    let wig = &tomo.wigner;
    let mut t = Table::new(&["x", "p", "w"]);
    let n = wig.len();
    for i in 0..n {
        for jj in 0..n {
            t.row(vec![wig.x[i].into(), wig.x[jj].into(), wig.value(i, jj).into()]);
        }
    }
    sink.write(&format!("{dir}/wigner.csv"), &t)?;

    let s_max = tomo
        .sinogram
        .curves
        .iter()
        .map(|c| c.s[c.s.len() - 1])
        .fold(0.0, f64::max);
    let unconverged = tomo
        .sinogram
        .curves
        .iter()
        .map(|c| c.converged.iter().filter(|ok| !**ok).count())
        .sum();
    let kurtosis = tomo
        .sinogram
        .marginals
        .iter()
        .map(|m| m.excess_kurtosis())
        .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let row = WignerRow {
        label,
        atoms: chain.len(),
        rabi_in_gamma: rabi,
        negativity: wig.negativity,
        integral: wig.integral(),
        boundary_ratio: wig.boundary_ratio,
        mean_x: tomo.sinogram.consistency.mean_x,
        mean_p: tomo.sinogram.consistency.mean_p,
        consistency_relative: tomo.sinogram.consistency.relative,
        max_excess_kurtosis: kurtosis,
        s_max,
        x_extent: wig.x[n - 1],
        unconverged,
    };
    Ok((row, tomo))
}

fn wigner_table(rows: &[WignerRow]) -> Table {
    let mut t = Table::new(&[
        "label",
        "atoms",
        "rabi_in_gamma",
        "negativity",
        "integral",
        "boundary_ratio",
        "mean_x",
        "mean_p",
        "consistency_relative",
        "max_excess_kurtosis",
        "s_max",
        "x_extent",
        "unconverged",
    ]);
    for r in rows {
        t.row(vec![
            r.label.clone().into(),
            r.atoms.into(),
            r.rabi_in_gamma.into(),
            r.negativity.into(),
            r.integral.into(),
            r.boundary_ratio.into(),
            r.mean_x.into(),
            r.mean_p.into(),
            r.consistency_relative.into(),
            r.max_excess_kurtosis.into(),
            r.s_max.into(),
            r.x_extent.into(),
            r.unconverged.into(),
        ]);
    }
    t
}

pub fn run_wigner(setup: &Setup, sink: &mut Sink) -> Result<Vec<WignerRow>, CliError> {
    let cfg = setup.config;
    let w = &cfg.wigner;
    let mut rows = Vec::new();
    for &n in &w.atoms {
        let chain = cfg.chain(Some(n))?;
        for &rabi in &w.rabi_in_gamma {
            let label = format!("N{n}_rabi{}", tag(rabi));
            let dir = format!("wigner/{label}");
            let (row, _) = tomography(setup, sink, &chain, rabi, w.detuning_in_gamma, &dir, label)?;
            rows.push(row);
        }
    }
    sink.write("wigner/summary.csv", &wigner_table(&rows))?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub sites: Vec<i64>,
    pub single_gap: bool,
    pub full: bool,
    pub right: f64,
    pub left: f64,
    pub unguided: f64,
    pub beta: f64,
    pub chirality: f64,
    pub negativity: Option<f64>,
}

pub fn run_gaps(setup: &Setup, sink: &mut Sink) -> Result<Vec<GapRow>, CliError> {
    let cfg = setup.config;
    let g = &cfg.gaps;
    let configs = match g.selection {
        GapSelection::All => enumerate_gap_configs(g.total_sites, g.atoms),
        GapSelection::SingleGap => {
            let mut c = vec![(0..g.atoms as i64).collect::<Vec<_>>()];
            c.extend(single_gap_configs(g.total_sites, g.atoms));
            c
        }
    };
    let mut rows = Vec::new();
    let mut wrows = Vec::new();
    for sites in configs {
        let chain = cfg.chain_with_sites(sites.clone())?;
        let k = setup.kernels(&chain)?;
        let drive = cfg.drive(g.rabi_in_gamma, cfg.drive.detuning_in_gamma)?;
        let state = steady_state(&build_liouvillian(&k, &chain, &drive).context("gaps")?).context("gaps")?;
        let e = state.emission(&k);
        let negativity = match g.wigner_rabi_in_gamma {
            Some(rabi) => {
                let name = label(&sites).replace(';', "-");
                let dir = format!("gaps/sites_{name}");
                let (row, _) = tomography(setup, sink, &chain, rabi, cfg.drive.detuning_in_gamma, &dir, label(&sites))?;
                let neg = row.negativity;
                wrows.push(row);
                Some(neg)
            }
            None => None,
        };
        rows.push(GapRow {
            single_gap: is_single_gap(&sites, g.total_sites),
            full: is_full(&sites),
            sites,
            right: e.right,
            left: e.left,
            unguided: e.unguided,
            beta: e.beta(),
            chirality: e.chirality(),
            negativity,
        });
    }
    let mut t = Table::new(&[
        "sites",
        "single_gap",
        "full",
        "right",
        "left",
        "unguided",
        "beta",
        "chirality",
        "negativity",
    ]);
    for r in &rows {
        t.row(vec![
            label(&r.sites).into(),
            r.single_gap.into(),
            r.full.into(),
            r.right.into(),
            r.left.into(),
            r.unguided.into(),
            r.beta.into(),
            r.chirality.into(),
            r.negativity.unwrap_or(f64::NAN).into(),
        ]);
    }
    sink.write("gaps/configurations.csv", &t)?;
    if !wrows.is_empty() {
        sink.write("gaps/wigner_summary.csv", &wigner_table(&wrows))?;
    }
    Ok(rows)
}
