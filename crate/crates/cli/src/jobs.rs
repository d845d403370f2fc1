//! The six commands. Each builds its artifacts in memory; writing them is
//! left to the caller so that output I/O stays serialized.

use std::f64::consts::PI;

use bosonic_lindblad::fockspace::{self, FockSpace, Oracle};
use bosonic_lindblad::lowtemp;
use bosonic_lindblad::matkernel::{self, CMatrix};
use bosonic_lindblad::model::{self, SpecConfig, SystemSpec, TwoModeChannel};
use bosonic_lindblad::qubitspeed::{self, QubitState, SpeedTrace};
use bosonic_lindblad::spectral;
use bosonic_lindblad::validation::{self, Check};

use crate::config::{Command, JobConfig, TimeGrid};
use crate::error::CliError;
use crate::plot::{LineStyle, Plot, Series};
use crate::table::{self, format_number, Table};

/// A file to be written under the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct JobOutput {
    pub artifacts: Vec<Artifact>,
    /// Lines for stdout.
    pub summary: Vec<String>,
    /// Set when the job completed but some check failed.
    pub failure: Option<CliError>,
}

pub fn run(command: Command, cfg: &JobConfig, seed: u64) -> Result<JobOutput, CliError> {
    cfg.validate(command)?;
    match command {
        Command::Spectrum => spectrum(cfg),
        Command::SteadyState => steady_state(cfg),
        Command::Evolve => evolve(cfg),
        Command::Speed => speed(cfg),
        Command::EpScan => ep_scan(cfg),
        Command::Validate => validate(cfg, seed),
    }
}

fn csv_name(cfg: &JobConfig, command: Command) -> String {
    cfg.outputs.csv.clone().unwrap_or_else(|| format!("{}.csv", command.name()))
}

fn svg_name(cfg: &JobConfig, command: Command) -> String {
    cfg.outputs.svg.clone().unwrap_or_else(|| format!("{}.svg", command.name()))
}

fn json_name(cfg: &JobConfig, command: Command) -> String {
    cfg.outputs.json.clone().unwrap_or_else(|| format!("{}.json", command.name()))
}

fn to_json(value: &impl serde::Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::numerical("numeric.serialize", e.to_string()))
}

fn occupation_label(occ: &[usize]) -> String {
    occ.iter().map(ToString::to_string).collect::<Vec<_>>().join(":")
}

/// System at temperature `n`, or as configured when `n` is `None`.
fn spec_at(cfg: &SpecConfig, n: Option<f64>) -> Result<SystemSpec, CliError> {
    let Some(n) = n else {
        return Ok(cfg.to_spec()?);
    };
    match cfg {
        SpecConfig::Thermal { .. } => {
            let base = cfg.to_spec()?;
            Ok(SystemSpec::thermal(base.omega().clone(), base.gamma(), n)?)
        }
        SpecConfig::TwoMode { .. } => Ok(model::assemble_two_mode(&channel(cfg)?, n)?),
        SpecConfig::General { .. } => Err(CliError::config(
            "config.n_T",
            "an n_T list needs a thermal or two_mode spec",
        )),
    }
}

fn temperatures(cfg: &JobConfig) -> Vec<Option<f64>> {
    if cfg.n_thermal.is_empty() {
        vec![None]
    } else {
        cfg.n_thermal.iter().copied().map(Some).collect()
    }
}

fn channel(cfg: &SpecConfig) -> Result<TwoModeChannel, CliError> {
    match cfg.channel() {
        Some(ch) => Ok(ch?),
        None => Err(CliError::config("config.spec", "this command needs a two_mode spec")),
    }
}

fn qubit(cfg: &JobConfig) -> QubitState {
    cfg.qubit
        .map(|q| qubitspeed::initial_qubit(q.theta, q.phi))
        .unwrap_or_else(qubitspeed::reference_qubit)
}

fn spectrum(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let spec = cfg.spec_config()?.to_spec()?;
    if !cfg.n_thermal.is_empty() {
        log::warn!("the Liouvillian spectrum does not depend on n_T; ignoring the n_T list");
    }
    let max_photons = cfg.max_photons.unwrap_or(2);
    let result = spectral::liouvillian_spectrum(&spec, max_photons)?;
    let oracle = match cfg.cutoff {
        Some(cutoff) => {
            let fs = FockSpace::new(spec.n_modes(), cutoff)?;
            Some(fockspace::build_liouvillian(&fs, &spec)?.eigenvalues()?)
        }
        None => None,
    };

    let mut header = vec!["ket", "bra", "re", "im"];
    if oracle.is_some() {
        header.push("oracle_distance");
    }
    let mut csv = Table::new(header);
    let mut worst = 0.0f64;
    for line in &result.lines {
        let mut row = vec![
            occupation_label(&line.ket).into(),
            occupation_label(&line.bra).into(),
            line.lambda.re.into(),
            line.lambda.im.into(),
        ];
        if let Some(values) = &oracle {
            let d = values.iter().map(|z| (z - line.lambda).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
            row.push(d.into());
        }
        csv.push(row);
    }
    let json: Vec<_> = result
        .lines
        .iter()
        .map(|l| serde_json::json!({"ket": l.ket, "bra": l.bra, "lambda": [l.lambda.re, l.lambda.im]}))
        .collect();

    let mut summary = vec![format!("{} eigenvalues with <= {max_photons} photons per side", result.lines.len())];
    if oracle.is_some() {
        summary.push(format!("max distance to the truncated oracle: {}", format_number(worst)));
    }
    Ok(JobOutput {
        artifacts: vec![
            Artifact::new(csv_name(cfg, Command::Spectrum), csv.to_csv()),
            Artifact::new(json_name(cfg, Command::Spectrum), to_json(&json)?),
        ],
        summary,
        failure: None,
    })
}

fn steady_state(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let spec_cfg = cfg.spec_config()?;
    let cutoff = cfg.cutoff.expect("validated");
    let mut csv = Table::new(["n_T", "ket", "bra", "re", "im"]);
    let mut summary = Vec::new();
    for n in temperatures(cfg) {
        let spec = spec_at(spec_cfg, n)?;
        let n_label = n.or(spec.n_thermal()).unwrap_or(f64::NAN);
        let fs = FockSpace::new(spec.n_modes(), cutoff)?;
        let ss = spectral::steady_state(&spec, &fs)?;
        let residual = spectral::liouvillian_residual(&fs, &spec, &ss.rho)?;
        for i in 0..fs.dim() {
            for j in 0..fs.dim() {
                let z = ss.rho[(i, j)];
                if z.norm() > 1e-15 {
                    csv.push(vec![
                        n_label.into(),
                        occupation_label(fs.occupation(i)).into(),
                        occupation_label(fs.occupation(j)).into(),
                        z.re.into(),
                        z.im.into(),
                    ]);
                }
            }
        }
        summary.push(format!(
            "n_T={n_label}: leakage {} residual {}",
            format_number(ss.leakage),
            format_number(residual)
        ));
    }
    Ok(JobOutput {
        artifacts: vec![Artifact::new(csv_name(cfg, Command::SteadyState), csv.to_csv())],
        summary,
        failure: None,
    })
}

/// One photon shared between the first two modes with the configured
/// polarization, or a single photon in a lone mode.
fn initial_photon(fs: &FockSpace, q: &QubitState) -> Result<CMatrix, CliError> {
    let n = fs.n_modes();
    let unit = |k: usize| {
        let mut occ = vec![0; n];
        occ[k] = 1;
        fs.ket(&occ)
    };
    let psi = if n == 1 {
        unit(0)?
    } else {
        let [a, b] = q.amplitudes();
        unit(0)? * a + unit(1)? * b
    };
    Ok(&psi * psi.adjoint())
}

fn evolve(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let spec_cfg = cfg.spec_config()?;
    let grid = cfg.time_grid()?;
    let times = grid.times();
    let cutoff = cfg.cutoff.expect("validated");
    let q = qubit(cfg);

    let first = spec_at(spec_cfg, temperatures(cfg)[0])?;
    let n_modes = first.n_modes();
    let thermal = first.n_thermal().is_some();
    let mut header = vec!["t".to_owned(), "n_T".into(), "trace".into(), "purity".into()];
    header.extend((0..n_modes).map(|k| format!("n{k}")));
    header.push("trace_leakage".into());
    if thermal {
        header.push("first_order_error".into());
    }
    let mut csv = Table::new(header);

    let fs = FockSpace::new(n_modes, cutoff)?;
    let numbers = (0..n_modes)
        .map(|k| fockspace::number_operator(&fs, k))
        .collect::<Result<Vec<_>, _>>()?;
    let rho0 = initial_photon(&fs, &q)?;
    let mut series = Vec::new();
    let mut summary = Vec::new();
    for (k, n) in temperatures(cfg).into_iter().enumerate() {
        let spec = spec_at(spec_cfg, n)?;
        let n_label = n.or(spec.n_thermal()).unwrap_or(f64::NAN);
        let l = fockspace::build_liouvillian(&fs, &spec)?;
        let oracle = Oracle::new(&l, &rho0)?;
        let mut total = Vec::with_capacity(times.len());
        let mut worst = 0.0f64;
        for &t in &times {
            let ev = oracle.at(t)?;
            let rho = &ev.rho;
            let occupations: Vec<f64> = numbers.iter().map(|nk| (nk * rho).trace().re).collect();
            total.push(occupations.iter().sum::<f64>());
            let mut row = vec![
                t.into(),
                n_label.into(),
                rho.trace().re.into(),
                (rho * rho).trace().re.into(),
            ];
            row.extend(occupations.into_iter().map(Into::into));
            row.push(ev.trace_leakage.into());
            if let Some(nt) = spec.n_thermal() {
                let approx = lowtemp::approx_propagate(&fs, &spec, &rho0, t)?.combine(nt);
                let err = matkernel::hs_norm(&(rho - approx));
                worst = worst.max(err);
                row.push(err.into());
            }
            csv.push(row);
        }
        if thermal {
            summary.push(format!("n_T={n_label}: max first-order error {}", format_number(worst)));
        }
        series.push(Series {
            label: format!("n_T={n_label}"),
            x: times.clone(),
            y: total,
            style: LineStyle::cycle(k),
        });
    }
    let svg = Plot {
        title: "Mean photon number".into(),
        x_label: "t".into(),
        y_label: "<N>".into(),
        log_y: cfg.plot.log_scale,
        series,
    }
    .render()
    .map_err(|e| CliError::numerical("numeric.plot", e.to_string()))?;
    summary.insert(0, format!("{} samples per temperature", times.len()));
    Ok(JobOutput {
        artifacts: vec![
            Artifact::new(csv_name(cfg, Command::Evolve), csv.to_csv()),
            Artifact::new(svg_name(cfg, Command::Evolve), svg),
        ],
        summary,
        failure: None,
    })
}

/// `v(n_T=...)` column label.
fn speed_label(n: f64) -> String {
    format!("v(n_T={n})")
}

/// Speed curves at zero temperature and at every listed `n_T`.
pub fn speed_traces(ch: &TwoModeChannel, q: &QubitState, n_thermal: &[f64], grid: TimeGrid) -> Result<Vec<SpeedTrace>, CliError> {
    let mut temps = vec![0.0];
    temps.extend_from_slice(n_thermal);
    Ok(qubitspeed::sweep(&[*ch], q, &temps, &grid.times())?)
}

fn speed(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let ch = channel(cfg.spec_config()?)?;
    let grid = cfg.time_grid()?;
    let q = qubit(cfg);
    let temps: Vec<f64> = if cfg.n_thermal.is_empty() {
        qubitspeed::REFERENCE_TEMPERATURES[1..].to_vec()
    } else {
        cfg.n_thermal.clone()
    };
    let traces = speed_traces(&ch, &q, &temps, grid)?;
    let zero = &traces[0];

    let mut header = vec!["t".to_owned(), "v0".into()];
    header.extend(temps.iter().map(|&n| speed_label(n)));
    let mut csv = Table::new(header);
    for (k, &t) in zero.times.iter().enumerate() {
        let mut row = vec![t.into(), zero.v0[k].into()];
        row.extend(traces[1..].iter().map(|tr| tr.v[k].into()));
        csv.push(row);
    }

    let mut qsl = Table::new(["t", "n_T", "v", "fidelity", "t_F"]);
    for tr in &traces {
        for k in 0..tr.times.len() {
            qsl.push(vec![
                tr.times[k].into(),
                tr.n_thermal.into(),
                tr.v[k].into(),
                tr.fidelity[k].into(),
                tr.t_f[k].into(),
            ]);
        }
    }

    let mut series = vec![Series {
        label: "v0".into(),
        x: zero.times.clone(),
        y: zero.v0.clone(),
        style: LineStyle::Solid,
    }];
    series.extend(traces[1..].iter().enumerate().map(|(k, tr)| Series {
        label: speed_label(tr.n_thermal),
        x: tr.times.clone(),
        y: tr.v.clone(),
        style: LineStyle::cycle(k + 1),
    }));
    let svg = Plot {
        title: "Speed of evolution".into(),
        x_label: "t".into(),
        y_label: "v".into(),
        log_y: cfg.plot.log_scale,
        series,
    }
    .render()
    .map_err(|e| CliError::numerical("numeric.plot", e.to_string()))?;

    let mut artifacts = vec![
        Artifact::new(csv_name(cfg, Command::Speed), csv.to_csv()),
        Artifact::new(svg_name(cfg, Command::Speed), svg),
        Artifact::new("qsl.csv", qsl.to_csv()),
    ];
    if let Some(surface) = cfg.surface {
        let steps = surface.theta_steps.max(1);
        let thetas: Vec<f64> = (0..=steps).map(|k| PI * k as f64 / steps as f64).collect();
        let mut all = vec![0.0];
        all.extend_from_slice(&temps);
        for n in all {
            let points = qubitspeed::speed_surface(&ch, n, &grid.times(), &thetas);
            artifacts.push(Artifact::new(format!("surface_nT{n}.csv"), table::surface_table(&points).to_csv()));
        }
    }
    if cfg.outputs.json.is_some() {
        artifacts.push(Artifact::new(json_name(cfg, Command::Speed), to_json(&traces)?));
    }

    let summary = traces
        .iter()
        .map(|tr| {
            let peak = tr.v.iter().copied().fold(0.0, f64::max);
            format!("n_T={}: peak v {}", tr.n_thermal, format_number(peak))
        })
        .collect();
    Ok(JobOutput {
        artifacts,
        summary,
        failure: None,
    })
}

/// Unit vector along `omega`, or perpendicular to `gamma` when `omega = 0`.
fn scan_direction(ch: &TwoModeChannel) -> [f64; 3] {
    let unit = |v: [f64; 3]| {
        let n = model::norm3(v);
        (n > 0.0).then(|| v.map(|x| x / n))
    };
    unit(ch.omega_vec)
        .or_else(|| unit(model::cross3(ch.gamma_vec, [0.0, 0.0, 1.0])))
        .unwrap_or([0.0, 0.0, 1.0])
}

fn ep_scan(cfg: &JobConfig) -> Result<JobOutput, CliError> {
    let ch = channel(cfg.spec_config()?)?;
    let gamma = model::norm3(ch.gamma_vec);
    let omega_max = cfg.scan.and_then(|s| s.omega_max).unwrap_or(3.0 * gamma);
    let points = cfg.scan.map_or(301, |s| s.points);
    if !(omega_max > 0.0 && omega_max.is_finite()) || points < 2 {
        return Err(CliError::config(
            "config.scan",
            format!("need omega_max > 0 and points >= 2, got {omega_max} and {points}"),
        ));
    }
    let mut omegas: Vec<f64> = (0..points).map(|k| omega_max * k as f64 / (points - 1) as f64).collect();
    if gamma <= omega_max && !omegas.contains(&gamma) {
        omegas.push(gamma);
        omegas.sort_by(f64::total_cmp);
    }
    let dir = scan_direction(&ch);

    let mut csv = Table::new(["omega", "q2_abs", "defectiveness", "defective", "regime"]);
    let mut q2 = Vec::with_capacity(omegas.len());
    let mut flagged = Vec::new();
    for &w in &omegas {
        let point = TwoModeChannel::new(ch.omega0, dir.map(|d| w * d), ch.gamma0, ch.gamma_vec)?;
        let cls = spectral::ep_classify(&point)?;
        if cls.defective {
            flagged.push(w);
        }
        q2.push(cls.distance);
        csv.push(vec![
            w.into(),
            cls.distance.into(),
            cls.defectiveness.into(),
            cls.defective.into(),
            cls.regime.to_string().into(),
        ]);
    }
    let svg = Plot {
        title: "Distance to the exceptional point".into(),
        x_label: "omega".into(),
        y_label: "|q|^2".into(),
        log_y: cfg.plot.log_scale,
        series: vec![Series {
            label: "|q|^2".into(),
            x: omegas.clone(),
            y: q2,
            style: LineStyle::Solid,
        }],
    }
    .render()
    .map_err(|e| CliError::numerical("numeric.plot", e.to_string()))?;
    let flagged: Vec<String> = flagged.iter().map(|w| format_number(*w)).collect();
    Ok(JobOutput {
        artifacts: vec![
            Artifact::new(csv_name(cfg, Command::EpScan), csv.to_csv()),
            Artifact::new(svg_name(cfg, Command::EpScan), svg),
        ],
        summary: vec![
            format!("{} frequencies in [0, {}], |gamma| = {}", omegas.len(), format_number(omega_max), format_number(gamma)),
            format!("defective at omega = [{}]", flagged.join(", ")),
        ],
        failure: None,
    })
}

fn cli_check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        suite: "cli".into(),
        name: name.into(),
        passed,
        detail,
    }
}

/// Output-format checks of the command-line layer itself.
pub fn cli_checks() -> Vec<Check> {
    let mut checks = Vec::new();

    let cfg: JobConfig = JobConfig {
        spec: Some(SpecConfig::TwoMode {
            omega0: 0.0,
            omega: [0.0, 0.0, 0.9],
            gamma0: 1.0,
            gamma: [0.9, 0.0, 0.0],
            n_thermal: 0.0,
        }),
        time_grid: Some(TimeGrid { t_max: 2.0, steps: 20 }),
        n_thermal: vec![0.1, 0.3],
        ..JobConfig::from_json("{}").expect("empty config parses")
    };
    let det = (|| -> Result<bool, CliError> {
        let a = run(Command::Speed, &cfg, 0)?.artifacts;
        let b = run(Command::Speed, &cfg, 0)?.artifacts;
        Ok(a == b)
    })();
    checks.push(match det {
        Ok(same) => cli_check("identical runs give identical bytes", same, "speed job run twice".into()),
        Err(e) => cli_check("identical runs give identical bytes", false, e.to_string()),
    });

    let samples: Vec<f64> = (-20..20)
        .map(|k| (k as f64 * 0.77).exp() * if k % 2 == 0 { PI } else { -std::f64::consts::E })
        .chain([0.0, 1.0, f64::MIN_POSITIVE, 1e300])
        .collect();
    let mut worst = 0.0f64;
    let mut stable = true;
    for &x in &samples {
        let text = format_number(x);
        let back: f64 = text.parse().unwrap_or(f64::NAN);
        stable &= format_number(back) == text;
        if x != 0.0 {
            worst = worst.max(((back - x) / x).abs());
        }
    }
    checks.push(cli_check(
        "numbers round-trip at 15 significant digits",
        stable && worst <= 5e-15,
        format!("max relative change {worst:.1e}, reformat stable {stable}"),
    ));

    let empty = SpeedTrace {
        times: vec![],
        v0: vec![],
        v: vec![],
        fidelity: vec![],
        t_f: vec![],
        channel: TwoModeChannel::new(0.0, [0.0; 3], 1.0, [0.0; 3]).expect("valid channel"),
        n_thermal: 0.0,
        theta: 0.0,
        phi: 0.0,
    };
    let csv = table::trace_table(&empty).to_csv();
    checks.push(cli_check("empty trace gives a header-only file", csv == "t,v0,v,fidelity,t_F\n", csv.trim().to_owned()));

    let flat = Plot {
        title: "zero".into(),
        x_label: "t".into(),
        y_label: "v".into(),
        log_y: true,
        series: vec![Series {
            label: "v".into(),
            x: vec![0.0, 1.0, 2.0],
            y: vec![0.0; 3],
            style: LineStyle::Solid,
        }],
    };
    let flat_ok = flat.render().map(|svg| {
        let ys: Vec<&str> = svg
            .split("points=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .map(|p| p.split(' ').filter_map(|xy| xy.split(',').nth(1)).collect())
            .unwrap_or_default();
        svg.matches("<polyline").count() == 1 && ys.len() == 3 && ys.iter().all(|y| *y == ys[0])
    });
    checks.push(cli_check(
        "all-zero trace renders a flat line",
        flat_ok == Ok(true),
        format!("{flat_ok:?}"),
    ));
    checks
}

fn validate(cfg: &JobConfig, seed: u64) -> Result<JobOutput, CliError> {
    let mut report = validation::full_report(seed);
    report.checks.extend(cli_checks());

    let mut csv = Table::new(["suite", "name", "passed", "detail"]);
    let mut summary = Vec::new();
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        log::info!("{verdict} {}/{}", c.suite, c.name);
        summary.push(format!("{verdict} {} / {}: {}", c.suite, c.name, c.detail));
        csv.push(vec![c.suite.clone().into(), c.name.clone().into(), c.passed.into(), c.detail.clone().into()]);
    }
    let counts = format!("{} passed, {} failed (seed {seed})", report.passed(), report.failed());
    summary.push(counts.clone());
    let failure = (!report.all_passed()).then(|| CliError::validation(counts));
    Ok(JobOutput {
        artifacts: vec![
            Artifact::new(csv_name(cfg, Command::Validate), csv.to_csv()),
            Artifact::new(json_name(cfg, Command::Validate), to_json(&report)?),
        ],
        summary,
        failure,
    })
}
