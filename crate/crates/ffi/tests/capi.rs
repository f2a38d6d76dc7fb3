use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use coia_ffi::*;

const EDGES: &str = "src_platform,src_user,dst_platform,dst_user,weight\n\
x,a,x,b,0.9\n\
x,a,x,c,0.8\n\
x,b,x,c,0.85\n\
x,c,x,d,0.1\n";

fn graph() -> *mut CoiaGraph {
    let csv = CString::new(EDGES).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { coia_graph_from_edge_csv(csv.as_ptr(), &mut g) }, CoiaStatus::Ok);
    g
}

fn last_error() -> String {
    let p = coia_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn graph_round_trip_through_csv() {
    let g = graph();
    unsafe {
        assert_eq!(coia_graph_node_count(g), 4);
        assert_eq!(coia_graph_edge_count(g), 4);
        let mut out = ptr::null_mut();
        assert_eq!(coia_graph_to_edge_csv(g, &mut out), CoiaStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        coia_string_free(out);
        assert!(text.starts_with("src_platform,src_user,dst_platform,dst_user,weight\n"));
        assert_eq!(text.lines().count(), 5);
        coia_graph_free(g);
    }
}

#[test]
fn grid_cells_and_selection() {
    let g = graph();
    unsafe {
        let edge = [0.0, 0.5, 1.0];
        let node = [0.0, 0.5];
        let mut s = ptr::null_mut();
        assert_eq!(coia_grid_search(g, edge.as_ptr(), 3, node.as_ptr(), 2, 0, &mut s), CoiaStatus::Ok);
        assert_eq!(coia_surface_cell_count(s), 6);
        let mut cell = std::mem::zeroed::<CoiaGridCell>();
        assert_eq!(coia_surface_cell(s, 2, &mut cell), CoiaStatus::Ok);
        assert_eq!((cell.edge_q, cell.node_q), (0.5, 0.0));
        assert_eq!(cell.has_density, 1);
        assert_eq!(cell.min_density, 1.0);
        assert_eq!(coia_surface_cell(s, 6, &mut cell), CoiaStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let (mut eq, mut nq) = (f64::NAN, f64::NAN);
        assert_eq!(coia_select_manual(s, 1.0, 0.5, &mut eq, &mut nq), CoiaStatus::Ok);
        assert_eq!((eq, nq), (1.0, 0.5));
        assert_eq!(coia_select_auto(s, 0.8, &mut eq, &mut nq), CoiaStatus::Ok);
        assert!(edge.contains(&eq) && node.contains(&nq));
        assert_eq!(coia_select_auto(s, 1.5, &mut eq, &mut nq), CoiaStatus::NoTransition);
        coia_surface_free(s);
        coia_graph_free(g);
    }
}

#[test]
fn presets_exposed() {
    let mut eq = 0.0;
    let mut nq = 0.0;
    let name = CString::new("telegram").unwrap();
    assert_eq!(unsafe { coia_preset(name.as_ptr(), &mut eq, &mut nq) }, CoiaStatus::Ok);
    assert_eq!((eq, nq), (0.99, 0.99));
    let name = CString::new("myspace").unwrap();
    assert_eq!(unsafe { coia_preset(name.as_ptr(), &mut eq, &mut nq) }, CoiaStatus::InvalidArgument);
}

#[test]
fn detection_json() {
    let g = graph();
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(coia_detect(g, 0.5, 0.0, 0, &mut d), CoiaStatus::Ok);
        assert_eq!(coia_detection_account_count(d), 3);
        let mut out = ptr::null_mut();
        assert_eq!(coia_detection_to_json(d, &mut out), CoiaStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        coia_string_free(out);
        assert_eq!(v["selected"]["edge_q"], 0.5);
        assert_eq!(v["accounts"].as_array().unwrap().len(), 3);
        assert_eq!(v["densities"][0], 1.0);
        assert_eq!(coia_detect(g, 1.5, 0.0, 0, &mut d), CoiaStatus::InvalidArgument);
        coia_detection_free(d);
        coia_graph_free(g);
    }
}

#[test]
fn corpus_to_courl_graph() {
    let mut lines = String::new();
    for user in ["u1", "u2"] {
        for k in 0..10 {
            lines.push_str(&format!(
                "{{\"id\":\"{user}-{k}\",\"platform\":\"x\",\"user_id\":\"{user}\",\"timestamp\":0,\"text\":\"see https://e.example/{k}\"}}\n"
            ));
        }
    }
    let text = CString::new(lines).unwrap();
    unsafe {
        let mut c = ptr::null_mut();
        assert_eq!(coia_corpus_parse(text.as_ptr(), &mut c), CoiaStatus::Ok);
        assert_eq!(coia_corpus_len(c), 20);
        let mut g = ptr::null_mut();
        assert_eq!(coia_courl_graph(c, 10, 1, 1.0, 0, &mut g), CoiaStatus::Ok);
        assert_eq!(coia_graph_node_count(g), 2);
        assert_eq!(coia_graph_edge_count(g), 1);
        coia_graph_free(g);
        assert_eq!(coia_courl_graph(c, 10, 5, 0.9, 0, &mut g), CoiaStatus::Empty);
        coia_corpus_free(c);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(coia_graph_from_edge_csv(ptr::null(), &mut g), CoiaStatus::NullArgument);
        let bad = CString::new("nope\n").unwrap();
        assert_eq!(coia_graph_from_edge_csv(bad.as_ptr(), &mut g), CoiaStatus::Parse);
        assert!(!last_error().is_empty());
        let invalid = [0x66u8, 0xff, 0];
        assert_eq!(
            coia_corpus_parse(invalid.as_ptr().cast(), &mut ptr::null_mut()),
            CoiaStatus::InvalidUtf8
        );
        let mut q = 0.0;
        assert_eq!(coia_quantile([1.0].as_ptr(), 0, 0.5, &mut q), CoiaStatus::Empty);
        assert_eq!(coia_quantile([5.0, 1.0, 3.0].as_ptr(), 3, 1.0, &mut q), CoiaStatus::Ok);
        assert_eq!(q, 5.0);
        coia_graph_free(ptr::null_mut());
        coia_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/coia.h")).unwrap();
    let source = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 20);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("COIA_STATUS_NO_TRANSITION = 5"));
}

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libcoia_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = static_lib() else {
        eprintln!("libcoia_ffi.a not found next to the test binary; skipping C link check");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link check");
        return;
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let bin = Path::new(env!("CARGO_TARGET_TMPDIR")).join("coia_smoke");
    let status = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C smoke exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
