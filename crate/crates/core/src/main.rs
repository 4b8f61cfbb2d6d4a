use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use tacsim::calibration::{fit_contact_coefficients, optimize_friction, read_press_samples, OutcomeGrid};
use tacsim::config::FrameworkConfig;
use tacsim::contact::{contact_area, solve_indentation, touching_pose, volume_from_force, CONTACT_THRESHOLD};
use tacsim::dataset::{ablation_sweep, builtin_object, run_sweep, AblationKind, ObjectRef, SweepSpec};
use tacsim::geometry::{load_mesh, HeightMap};
use tacsim::grasp::{write_episode, EpisodeSummary, GraspConfig, ObjectModel, Simulator};
use tacsim::optics::{compose_frame, render_tactile, LookupSettings, LookupTable, PhongReference};
use tacsim::{Error, Result};

#[derive(Parser)]
#[command(name = "tacsim", version, about = "Vision-based tactile sensor and grasp simulation")]
struct Cli {
    /// JSON file with `sensor`, `contact` and `thresholds` sections; goes before the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of sweep specs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Press a mesh into the sensor and write the contact map and tactile image.
    Press {
        #[arg(long)]
        mesh: PathBuf,
        /// Normal force, N.
        #[arg(long)]
        force: f64,
        /// Normal coefficient k_n, mm³/N.
        #[arg(long)]
        knorm: Option<f64>,
        /// Mesh units to mm.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one grasp episode.
    Grasp {
        /// Built-in object name or an object JSON file.
        #[arg(long)]
        object: String,
        /// F,X,Y,Z
        #[arg(long)]
        config: String,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a dataset from a sweep spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit k_n from a `force,measurement` CSV of presses.
    CalibrateContact {
        #[arg(long)]
        presses: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search the friction coefficient matching a reference outcome grid.
    CalibrateFriction {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        object: String,
        /// X,Y of the grasps; defaults to the bounding-box centre.
        #[arg(long)]
        location: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an ablation: dataset_size, friction or center_of_mass.
    Ablate {
        #[arg(long)]
        kind: String,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shade a 16-bit height-map PNG with a lookup table.
    Render {
        #[arg(long)]
        heightmap: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a lookup table against the reference shader and save it.
    BuildTable {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => FrameworkConfig::load(path)?,
        None => FrameworkConfig::default(),
    };
    match cli.command {
        Command::Press {
            mesh,
            force,
            knorm,
            scale,
            table,
            out,
        } => {
            let mut params = config.contact;
            if let Some(k) = knorm {
                params.k_n = k;
            }
            params.validate()?;
            if !(force >= 0.0 && force.is_finite()) {
                return Err(Error::InvalidInput(format!("force {force}")));
            }
            let mesh = load_mesh(&mesh, scale)?;
            let camera = config.sensor.camera(&params);
            let pose = touching_pose(&mesh, &camera, &params)?;
            let target = volume_from_force(force, &params);
            let solution = solve_indentation(&mesh, &pose, &camera, target, &params, &config.solve_options())?;
            let table = load_or_build_table(&config, table.as_deref())?;
            let rgb = render_tactile(&solution.contact_map, &table, config.sensor.sigma)?;
            let frame = compose_frame(rgb, &config.sensor.marker_field()?, 0.0);
            fs::create_dir_all(&out)?;
            solution.contact_map.save_png(&out.join("contact_map.png"))?;
            frame.rgb.save(out.join("tactile.png"))?;
            let report = json!({
                "force": force,
                "target_volume": target,
                "achieved_volume": solution.achieved_volume,
                "indentation_depth": solution.indentation_depth,
                "iterations": solution.iterations,
                "contact_area": contact_area(&solution.contact_map, CONTACT_THRESHOLD),
            });
            fs::write(out.join("press.json"), serde_json::to_vec_pretty(&report)?)?;
            println!("{report}");
        }
        Command::Grasp {
            object,
            config: grasp,
            table,
            out,
        } => {
            let sim = simulator(&config, table.as_deref())?;
            let object = parse_object(&object)?;
            let [force, x, y, z] = parse_floats::<4>(&grasp, "F,X,Y,Z")?;
            let episode = sim.run_episode(&object, &GraspConfig::new(force, x, y, z))?;
            write_episode(&episode, &out)?;
            println!("{}", serde_json::to_string(&EpisodeSummary::of(&episode).outcome)?);
        }
        Command::Sweep { spec, table, out } => {
            let spec = load_spec(&spec, cli.seed)?;
            let sim = simulator(&config, table.as_deref())?;
            let manifest = run_sweep(&sim, &spec, &out)?;
            println!("{}", serde_json::to_string(&manifest.meta)?);
        }
        Command::CalibrateContact { presses, out } => {
            let fit = fit_contact_coefficients(&read_press_samples(&presses)?)?;
            let params = tacsim::contact::ContactParams {
                k_n: fit.coefficient,
                ..config.contact
            };
            fs::write(&out, serde_json::to_vec_pretty(&params)?)?;
            println!("{}", serde_json::to_string(&fit)?);
        }
        Command::CalibrateFriction {
            reference,
            object,
            location,
            out,
        } => {
            let object = parse_object(&object)?;
            let reference = OutcomeGrid::read_csv(&reference, object.name.clone())?;
            let location = match location {
                Some(s) => parse_floats::<2>(&s, "X,Y")?,
                None => {
                    let c = object.mesh.bounds().center();
                    [c.x, c.y]
                }
            };
            let sim = Simulator::labels_only(&config)?;
            let result = optimize_friction(&sim, &reference, &object, location)?;
            result.write_json(&out)?;
            println!("{}", json!({"best": result.best, "mismatches": result.mismatches}));
        }
        Command::Ablate {
            kind,
            values,
            spec,
            table,
            out,
        } => {
            let kind: AblationKind = kind.parse()?;
            let spec = load_spec(&spec, cli.seed)?;
            let sim = simulator(&config, table.as_deref())?;
            let report = ablation_sweep(&sim, kind, &values, &spec, &out)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Render { heightmap, table, out } => {
            let table = LookupTable::load(&table)?;
            let map = HeightMap::load_png(&heightmap, table.pixel_pitch())?;
            render_tactile(&map, &table, table.sigma())?.save(&out)?;
        }
        Command::BuildTable { out } => {
            let table = build_table(&config)?;
            table.save(&out)?;
            println!("{}", json!({"populated_bins": table.populated_bins(), "residual_rms": table.residual_rms()}));
        }
    }
    Ok(())
}

fn build_table(config: &FrameworkConfig) -> Result<LookupTable> {
    let s = &config.sensor;
    let settings = LookupSettings {
        direction_bins: s.direction_bins,
        magnitude_bins: s.magnitude_bins,
        sigma: s.sigma,
        ..LookupSettings::default()
    };
    LookupTable::from_reference(&PhongReference::new(s.width, s.height, s.sigma), s.pixel_pitch, &settings)
}

fn load_or_build_table(config: &FrameworkConfig, path: Option<&Path>) -> Result<LookupTable> {
    match path {
        Some(p) => LookupTable::load(p),
        None => build_table(config),
    }
}

fn simulator(config: &FrameworkConfig, table: Option<&Path>) -> Result<Simulator> {
    match table {
        Some(p) => Ok(Simulator::labels_only(config)?.with_table(Arc::new(LookupTable::load(p)?))),
        None => Simulator::new(config),
    }
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<SweepSpec> {
    let mut spec = SweepSpec::load(path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    Ok(spec)
}

/// A built-in name, or a JSON file holding an object reference.
fn parse_object(arg: &str) -> Result<ObjectModel> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") {
        let object: ObjectRef = serde_json::from_slice(&fs::read(path)?)?;
        object.load()
    } else {
        builtin_object(arg)
    }
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("expected {what}, got {s:?}")))?;
    values
        .try_into()
        .map_err(|_| Error::InvalidInput(format!("expected {what}, got {s:?}")))
}
