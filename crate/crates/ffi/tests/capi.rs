use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use flockns_ffi::*;

const CONFIG: &str = "dim = 1\nnx = 16\nnv = 16\nv_max = 4\nmu = 0.1\ngamma = 1.4\nt_end = 0.05\n\
                      kinetic_amplitude = 0.5\nfluid_velocity = mode\n";

fn last_error() -> String {
    unsafe { CStr::from_ptr(fln_last_error()) }.to_string_lossy().into_owned()
}

fn new_sim(text: &str) -> (*mut FlnConfig, *mut FlnSim) {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(fln_config_parse(text.as_ptr(), &mut cfg), FlnStatus::Ok);
        assert_eq!(fln_sim_new(cfg, &mut sim), FlnStatus::Ok, "{}", last_error());
    }
    (cfg, sim)
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(fln_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn invalid_config_reports_constraint() {
    let text = CString::new(CONFIG.replace("gamma = 1.4", "gamma = 0.9")).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { fln_config_parse(text.as_ptr(), &mut cfg) };
    assert_eq!(status, FlnStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("gamma > 1"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(fln_config_parse(ptr::null(), &mut cfg), FlnStatus::NullPointer);
        assert_eq!(fln_sim_step(ptr::null_mut(), ptr::null_mut()), FlnStatus::NullPointer);
        assert!(fln_sim_time(ptr::null()).is_nan());
        fln_sim_free(ptr::null_mut());
        fln_config_free(ptr::null_mut());
    }
}

#[test]
fn run_until_reaches_end_time() {
    let (cfg, sim) = new_sim(CONFIG);
    unsafe {
        let mut dt = 0.0;
        assert_eq!(fln_sim_step(sim, &mut dt), FlnStatus::Ok);
        assert!(dt > 0.0 && (fln_sim_time(sim) - dt).abs() < 1e-15);
        assert_eq!(fln_sim_run_until(sim, 0.05), FlnStatus::Ok);
        assert!((fln_sim_time(sim) - 0.05).abs() < 1e-12);

        let mut d = FlnDiagnostics::default();
        assert_eq!(fln_sim_diagnostics(sim, &mut d), FlnStatus::Ok);
        assert_eq!(d.t, fln_sim_time(sim));
        assert!(d.energy > 0.0 && d.mass_rho > 0.0);

        let n = fln_sim_cells(sim);
        assert_eq!(n, 16);
        let mut rho = vec![0.0; n];
        assert_eq!(fln_sim_copy_density(sim, rho.as_mut_ptr(), n), FlnStatus::Ok);
        let mass: f64 = rho.iter().sum::<f64>() / 16.0;
        assert!((mass - d.mass_rho).abs() < 1e-12);
        assert_eq!(fln_sim_copy_density(sim, rho.as_mut_ptr(), n - 1), FlnStatus::BufferTooSmall);

        fln_sim_free(sim);
        fln_config_free(cfg);
    }
}

#[test]
fn snapshot_written_and_loadable() {
    let (cfg, sim) = new_sim(CONFIG);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.bin");
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(fln_sim_step(sim, ptr::null_mut()), FlnStatus::Ok);
        assert_eq!(fln_sim_write_snapshot(sim, c_path.as_ptr()), FlnStatus::Ok);
        let loaded = flockns::io::output::load_snapshot(&path).unwrap();
        assert_eq!(loaded.t, fln_sim_time(sim));
        let missing = CString::new("/nonexistent-dir/x.bin").unwrap();
        assert_eq!(fln_sim_write_snapshot(sim, missing.as_ptr()), FlnStatus::Io);
        fln_sim_free(sim);
        fln_config_free(cfg);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/flockns.h")).unwrap();
    for name in [
        "fln_version",
        "fln_last_error",
        "fln_config_parse",
        "fln_config_free",
        "fln_sim_new",
        "fln_sim_step",
        "fln_sim_run_until",
        "fln_sim_time",
        "fln_sim_cells",
        "fln_sim_diagnostics",
        "fln_sim_copy_density",
        "fln_sim_write_snapshot",
        "fln_sim_free",
        "typedef struct FlnSim FlnSim",
        "FLN_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"flockns.h\"\nint main(void) { FlnDiagnostics d; FlnStatus s = FLN_STATUS_OK; (void)d; return (int)s; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}
