use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use mlquad_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        mlq_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn mesh_roundtrip() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(mlq_mesh_generate(MlqDomain::UnitSquare, 0.25, 1, &mut mesh), MlqStatus::Ok);
        let (mut nv, mut nt) = (0, 0);
        assert_eq!(mlq_mesh_counts(mesh, &mut nv, &mut nt), MlqStatus::Ok);
        assert!(nv > 9 && nt > 8);
        let mut xy = vec![0.0; 2 * nv];
        assert_eq!(mlq_mesh_vertices(mesh, xy.as_mut_ptr(), xy.len()), MlqStatus::Ok);
        assert!(xy.iter().all(|v| (0.0..=1.0).contains(v)));
        let mut tri = vec![0usize; 3 * nt];
        assert_eq!(mlq_mesh_triangles(mesh, tri.as_mut_ptr(), tri.len()), MlqStatus::Ok);
        assert!(tri.iter().all(|&i| i < nv));
        assert_eq!(mlq_mesh_triangles(mesh, tri.as_mut_ptr(), 2), MlqStatus::BufferTooSmall);
        assert!(last_error().contains("needed"));
        mlq_mesh_free(mesh);
    }
}

#[test]
fn bad_mesh_size_reports_error() {
    unsafe {
        let mut mesh = ptr::null_mut();
        let s = mlq_mesh_generate(MlqDomain::UnitSquare, 1.0, 1, &mut mesh);
        assert_eq!(s, MlqStatus::Numerical);
        assert!(mesh.is_null());
        assert!(last_error().contains("too coarse"), "{}", last_error());
        assert_eq!(
            mlq_mesh_generate(MlqDomain::UnitDisk, -1.0, 1, &mut mesh),
            MlqStatus::InvalidArgument
        );
    }
}

#[test]
fn null_handles() {
    unsafe {
        let (mut a, mut b) = (0, 0);
        assert_eq!(mlq_mesh_counts(ptr::null(), &mut a, &mut b), MlqStatus::NullPointer);
        assert_eq!(
            mlq_rule_new(MlqFamily::QmcHalton, 0, 2, 0, false, ptr::null_mut()),
            MlqStatus::NullPointer
        );
        mlq_mesh_free(ptr::null_mut());
        mlq_rule_free(ptr::null_mut());
        mlq_report_free(ptr::null_mut());
    }
}

#[test]
fn qmc_difference_rule() {
    unsafe {
        let mut rule = ptr::null_mut();
        assert_eq!(mlq_rule_new(MlqFamily::QmcHalton, 1, 3, 0, true, &mut rule), MlqStatus::Ok);
        let (mut n, mut d) = (0, 0);
        mlq_rule_size(rule, &mut n, &mut d);
        assert_eq!((n, d), (20, 3));
        let mut w = vec![0.0; n];
        assert_eq!(mlq_rule_weights(rule, w.as_mut_ptr(), n), MlqStatus::Ok);
        assert_eq!(w[0], 1.0 / 20.0 - 1.0 / 10.0);
        assert_eq!(w[19], 1.0 / 20.0);
        let mut y = vec![0.0; n * d];
        assert_eq!(mlq_rule_nodes(rule, y.as_mut_ptr(), y.len()), MlqStatus::Ok);
        assert_eq!(&y[..2], &[0.0, 2.0 / 3.0 - 1.0]);
        mlq_rule_free(rule);
    }
}

#[test]
fn estimate_through_handles() {
    unsafe {
        let mut rep = ptr::null_mut();
        let s = mlq_estimate(
            MlqProblem::AnalyticDisk,
            1,
            MlqFamily::QmcHalton,
            MlqRepresentation::NestedQ,
            1,
            1,
            &mut rep,
        );
        assert_eq!(s, MlqStatus::Ok, "{}", last_error());
        let (mut solves, mut cost, mut nv) = (0, 0, 0);
        mlq_report_summary(rep, &mut solves, &mut cost, &mut nv);
        assert_eq!(solves, 30);
        assert!(cost > solves);
        let mut values = vec![0.0; nv];
        assert_eq!(mlq_report_values(rep, values.as_mut_ptr(), nv), MlqStatus::Ok);
        let max = values.iter().cloned().fold(0.0, f64::max);
        assert!(max > 0.15 && max < 0.35, "{max}");
        let mut err = 0.0;
        assert_eq!(mlq_report_error_h1(rep, &mut err), MlqStatus::Ok);
        assert!(err > 0.0 && err < 0.5);
        mlq_report_free(rep);

        let s = mlq_estimate(
            MlqProblem::AnalyticDisk,
            0,
            MlqFamily::QmcHalton,
            MlqRepresentation::NestedV,
            3,
            1,
            &mut rep,
        );
        assert_eq!(s, MlqStatus::InvalidArgument);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mlq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mlquad.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "mlq_mesh_generate",
        "mlq_rule_new",
        "mlq_estimate",
        "mlq_report_free",
        "mlq_last_error",
        "MLQ_STATUS_OK",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"mlquad.h\"\nint main(void) { MlqMesh *m = 0; MlqStatus s = mlq_mesh_generate(MLQ_DOMAIN_UNIT_DISK, 0.2, 1, &m); mlq_mesh_free(m); return (int)s; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
