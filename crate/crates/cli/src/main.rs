use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaugebc::dn::assemble_dn;
use gaugebc::hodge::{exact_dirichlet, harmonic_dirichlet, harmonic_exact, harmonic_fields, harmonic_neumann, HmfBases};
use gaugebc::mesh::{annulus_gluing_map, collar_gluing_map, gen_tetra_sphere};
use gaugebc::reduction::{admissible_space, complex_structure, gluing_compare, lagrangian_check, lagrangian_graph, reduce_hypersurface};
use gaugebc::topology::{betti_numbers, relative_betti_numbers};
use gaugebc::verify::{default_suite, run_suite, verify_region, Expected, Report, VerifyOptions};
use gaugebc::{collar, gen_annulus, gen_circle, gen_disk, glue, load_mesh, DecOperators, GluingMap, SimplicialComplex, Tolerances};
use nalgebra::DMatrix;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gaugebc", version, about = "Boundary data of abelian Yang-Mills fields on simplicial meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh file.
    Gen(GenArgs),
    /// Hodge-Morrey-Friedrichs subspaces and splitting checks.
    Decompose(RunArgs),
    /// Dirichlet-to-Neumann operator, its reduction and spectrum.
    Dn(RunArgs),
    /// Reduced boundary spaces, complex structure and Lagrangian tests.
    Reduce(RunArgs),
    /// Glue two boundary components and compare codimensions.
    Glue(GlueArgs),
    /// Run every check on a mesh or on a built-in suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GenKind {
    /// Disk with the given number of boundary edges.
    #[arg(long, value_name = "M")]
    disk: Option<usize>,
    /// Annulus with radii 1 and 2 and the given number of edges per circle.
    #[arg(long, value_name = "M")]
    annulus: Option<usize>,
    /// Polygonal circle.
    #[arg(long, value_name = "M")]
    circle: Option<usize>,
    /// Generator spec, e.g. `collar:16:4:0.5`.
    #[arg(long, value_name = "SPEC")]
    gen: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    kind: GenKind,
    /// Output directory; the file is named after the mesh id. Prints to stdout if absent.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MeshSource {
    /// Mesh JSON file.
    #[arg(long, value_name = "PATH")]
    mesh: Option<PathBuf>,
    /// Generator spec: disk:M, annulus:M:R_IN:R_OUT, circle:M, collar:M:LAYERS:EPS, torus:M, tetra.
    #[arg(long, value_name = "SPEC")]
    gen: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
    tol_rank: f64,
    #[arg(long, default_value_t = 1e-8, allow_negative_numbers = true)]
    tol_res: f64,
    #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
    tol_angle: f64,
}

impl TolArgs {
    fn tolerances(self) -> Result<Tolerances> {
        Ok(Tolerances::new(self.tol_rank, self.tol_res, self.tol_angle)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: MeshSource,
    #[command(flatten)]
    tol: TolArgs,
    /// Cochain degree.
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// Output directory for JSON and CSV files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write JSON reports (default when neither format is given).
    #[arg(long)]
    json: bool,
    /// Write matrices and spectra as CSV (needs --out).
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct GlueArgs {
    #[command(flatten)]
    source: MeshSource,
    #[command(flatten)]
    tol: TolArgs,
    /// Gluing map JSON: {"source_component", "target_component", "vertex_bijection"}.
    #[arg(long, value_name = "PATH", conflicts_with = "canonical")]
    map: Option<PathBuf>,
    /// Use the built-in map of an annulus (Sigma1 -> Sigma2) or a collar (Sigma -> Sigma').
    #[arg(long)]
    canonical: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_name = "PATH", conflicts_with_all = ["gen", "suite"])]
    mesh: Option<PathBuf>,
    #[arg(long, value_name = "SPEC", conflicts_with = "suite")]
    gen: Option<String>,
    /// Built-in suite; only `default` exists.
    #[arg(long, value_name = "NAME")]
    suite: Option<String>,
    #[command(flatten)]
    tol: TolArgs,
    /// Penalty weight of the gauge term.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_spec(spec: &str) -> Result<SimplicialComplex> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| anyhow!("generator spec `{spec}` is missing field {i}"))?
            .parse::<f64>()
            .with_context(|| format!("bad number in `{spec}`"))
    };
    let int = |i: usize| -> Result<usize> {
        let v = num(i)?;
        if v < 0.0 || v.fract() != 0.0 {
            bail!("field {i} of `{spec}` must be a nonnegative integer");
        }
        Ok(v as usize)
    };
    let expect = |n: usize| -> Result<()> {
        if parts.len() != n {
            bail!("generator spec `{spec}` takes {} field(s)", n - 1);
        }
        Ok(())
    };
    let m = match parts[0] {
        "disk" => {
            expect(2)?;
            gen_disk(int(1)?)?
        }
        "annulus" => {
            if parts.len() == 2 {
                gen_annulus(int(1)?, 1.0, 2.0)?
            } else {
                expect(4)?;
                gen_annulus(int(1)?, num(2)?, num(3)?)?
            }
        }
        "circle" => {
            expect(2)?;
            gen_circle(int(1)?)?
        }
        "collar" => {
            expect(4)?;
            collar(&gen_circle(int(1)?)?, int(2)?, num(3)?)?
        }
        "torus" => {
            expect(2)?;
            let a = gen_annulus(int(1)?, 1.0, 2.0)?;
            glue(&a, &annulus_gluing_map(&a)?)?.with_id(format!("torus{}", int(1)?))
        }
        "tetra" => {
            expect(1)?;
            gen_tetra_sphere()?
        }
        other => bail!("unknown generator `{other}`"),
    };
    Ok(m)
}

fn load(source: &MeshSource) -> Result<SimplicialComplex> {
    match (&source.mesh, &source.gen) {
        (Some(p), None) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            load_mesh(&bytes).with_context(|| format!("loading {}", p.display()))
        }
        (None, Some(s)) => parse_spec(s),
        _ => bail!("exactly one of --mesh and --gen is required"),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

fn csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for r in m.row_iter() {
        let row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn csv_column(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}\n")).collect()
}

fn emit(out: &Option<PathBuf>, name: &str, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(dir) => write(dir, name, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let k = &a.kind;
    let m = if let Some(n) = k.disk {
        gen_disk(n)?
    } else if let Some(n) = k.annulus {
        gen_annulus(n, 1.0, 2.0)?
    } else if let Some(n) = k.circle {
        gen_circle(n)?
    } else {
        parse_spec(k.gen.as_deref().unwrap_or_default())?
    };
    let text = m.to_json() + "\n";
    match &a.out {
        Some(dir) => write(dir, &format!("{}.json", m.id()), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_decompose(a: &RunArgs) -> Result<()> {
    let tol = a.tol.tolerances()?;
    let m = load(&a.source)?;
    let k = a.degree;
    if k > m.dim() {
        bail!("degree {k} exceeds dimension {}", m.dim());
    }
    let ops = DecOperators::build(&m)?;
    let bases = HmfBases::new(&ops, k, tol.rank);
    let mut res: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for i in 0..ops.count(k) {
        // deterministic probes: unit cochains
        let mut e = nalgebra::DVector::zeros(ops.count(k));
        e[i] = 1.0;
        let s = bases.split(&e)?;
        res = res.max(s.reconstruction_residual(ops.mass(k), &e));
        orth = orth.max(s.orthogonality_defect(ops.mass(k), &e));
    }
    let mut subspaces = vec![harmonic_fields(&ops, k, tol.rank), harmonic_neumann(&ops, k, tol.rank)];
    if ops.has_boundary() {
        subspaces.push(harmonic_dirichlet(&ops, k, tol.rank)?);
    }
    subspaces.push(harmonic_exact(&ops, k, tol.rank));
    subspaces.push(exact_dirichlet(&ops, k, tol.rank));
    let report = json!({
        "mesh": m.id(),
        "degree": k,
        "betti": betti_numbers(&m)?,
        "relative_betti": relative_betti_numbers(&m)?,
        "dimensions": subspaces.iter().map(|s| json!({"tag": s.tag, "dimension": s.dim()})).collect::<Vec<_>>(),
        "reconstruction_residual": res,
        "orthogonality_defect": orth,
        "tolerance": tol.residual,
        "pass": res <= tol.residual && orth <= tol.residual,
    });
    emit(&a.out, "decompose.json", &report)?;
    if let Some(dir) = &a.out {
        let bases: Vec<Value> = subspaces.iter().map(|s| s.to_json()).collect();
        write(dir, "subspaces.json", &(serde_json::to_string_pretty(&bases)? + "\n"))?;
    }
    Ok(())
}

fn cmd_dn(a: &RunArgs) -> Result<()> {
    let tol = a.tol.tolerances()?;
    let m = load(&a.source)?;
    let ops = DecOperators::build(&m)?;
    if !ops.has_boundary() {
        bail!("mesh {} has no boundary", m.id());
    }
    let dn = assemble_dn(&ops, 1.0, tol.rank)?;
    let want_json = a.json || !a.csv;
    if a.csv {
        let dir = a.out.as_ref().ok_or_else(|| anyhow!("--csv needs --out"))?;
        write(dir, "lambda.csv", &csv(&dn.lambda))?;
        write(dir, "lambda_reduced.csv", &csv(&dn.lambda_red))?;
        write(dir, "spectrum.csv", &csv_column(&dn.spectrum()))?;
        write(dir, "spectrum_reduced.csv", &csv_column(&dn.reduced_spectrum()))?;
    }
    if want_json {
        let mut v = dn.to_json();
        v["mesh"] = json!(m.id());
        v["kernel_dimension"] = json!(dn.kernel.dim());
        v["spectrum"] = json!(dn.spectrum());
        v["reduced_spectrum"] = json!(dn.reduced_spectrum());
        emit(&a.out, "dn.json", &v)?;
    }
    Ok(())
}

fn cmd_reduce(a: &RunArgs) -> Result<()> {
    let tol = a.tol.tolerances()?;
    let m = load(&a.source)?;
    let ops = DecOperators::build(&m)?;
    let report = if !ops.has_boundary() {
        let l = reduce_hypersurface(&ops, tol.rank)?;
        let (_, cert) = complex_structure(&l, 100, 7)?;
        json!({
            "mesh": m.id(),
            "closed": true,
            "reduced_dimension": l.dim(),
            "coclosed_dimension": l.coclosed_dim(),
            "j_certificate": cert,
        })
    } else {
        let dn = assemble_dn(&ops, 1.0, tol.rank)?;
        let full = reduce_hypersurface(ops.boundary_ops()?, tol.rank)?;
        let (_, full_cert) = complex_structure(&full, 100, 7)?;
        let adm = admissible_space(&ops, tol.rank)?;
        let (_, cert) = complex_structure(&adm.reduced, 100, 7)?;
        let graph = lagrangian_graph(&adm.k, &dn.lambda_red, tol.rank);
        let lag = lagrangian_check(&graph, &adm.reduced, Some(&dn.lambda_red), 1e-10, tol.angle)?;
        json!({
            "mesh": m.id(),
            "closed": false,
            "boundary_reduced_dimension": full.dim(),
            "coclosed_dimension": full.coclosed_dim(),
            "admissible_dimension": adm.reduced.dim(),
            "codimension": 2 * adm.reduced.coclosed_dim() - adm.reduced.dim(),
            "boundary_j_certificate": full_cert,
            "admissible_j_certificate": cert,
            "dynamics": lag,
        })
    };
    emit(&a.out, "reduce.json", &report)
}

fn cmd_glue(a: &GlueArgs) -> Result<()> {
    let tol = a.tol.tolerances()?;
    let m = load(&a.source)?;
    let map: GluingMap = match &a.map {
        Some(p) => serde_json::from_slice(&fs::read(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => {
            if m.collar_info().is_some() {
                collar_gluing_map(&m)?
            } else {
                annulus_gluing_map(&m).context("no --map given and the mesh has no built-in gluing map")?
            }
        }
    };
    let (glued, cmp) = gluing_compare(&m, &map, tol.rank)?;
    let report = json!({
        "mesh": m.id(),
        "glued": glued.id(),
        "source_component": map.source_component,
        "target_component": map.target_component,
        "comparison": cmp,
    });
    if let Some(dir) = &a.out {
        write(dir, "glued.json", &(glued.to_json() + "\n"))?;
    }
    emit(&a.out, "glue.json", &report)
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let opts = VerifyOptions {
        tol: a.tol.tolerances()?,
        weight: a.weight,
        samples: a.samples,
        seed: a.seed,
    };
    let reports: Vec<Report> = match (&a.suite, &a.mesh, &a.gen) {
        (Some(name), None, None) => {
            if name != "default" {
                bail!("unknown suite `{name}`");
            }
            let cases = default_suite()?;
            run_suite(&cases, &opts).into_iter().collect::<gaugebc::Result<_>>()?
        }
        (None, mesh, gen) => {
            let m = load(&MeshSource {
                mesh: mesh.clone(),
                gen: gen.clone(),
            })?;
            vec![verify_region(m.id(), &m, &Expected::default(), &opts)?]
        }
        _ => bail!("give one of --suite, --mesh, --gen"),
    };
    let pass = reports.iter().all(Report::pass);
    for r in &reports {
        for c in r.failures() {
            eprintln!("FAIL {} {}: {} > {}", r.mesh, c.name, c.value, c.tolerance);
        }
    }
    let v = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    emit(&a.out, "verify.json", &v)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Decompose(a) => cmd_decompose(a).map(|_| true),
        Command::Dn(a) => cmd_dn(a).map(|_| true),
        Command::Reduce(a) => cmd_reduce(a).map(|_| true),
        Command::Glue(a) => cmd_glue(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
