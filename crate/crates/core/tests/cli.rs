use std::fs;

use qnet::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("qnet").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn purify_example() {
    let (code, out, _) = call(&["purify", "--protocol", "dejmps", "--start-fidelity", "0.85", "--rounds", "8"]);
    assert_eq!(code, 0);
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 10);
    let last: Vec<&str> = rows[9].split(',').collect();
    assert_eq!(last[0], "dejmps");
    assert_eq!(last[1], "8");
    let error: f64 = last[3].parse().unwrap();
    assert!(error < 1e-6);
    assert!(out.starts_with("# params: t_1q = 1.0;"));
}

#[test]
fn plan_example_covers_full_range() {
    let (code, out, err) = call(&["plan", "--scheme", "endpoints-only", "--distances", "600:38400:600"]);
    assert_eq!(code, 0, "{err}");
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 65);
    assert!(rows[0].starts_with("distance,hops,scheme"));
    assert!(rows[1].starts_with("600,1,endpoints-only,true"));
    assert!(rows[64].starts_with("38400,64,"));
}

#[test]
fn out_dir_and_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = call(&["--out", d, "model", "--distances", "0:1200:600"]);
    assert_eq!(code, 0);
    assert!(out.contains("model.csv"));
    let csv = fs::read_to_string(dir.path().join("model.csv")).unwrap();
    assert!(csv.contains("# crossover_cells: 617"));
    assert_eq!(data_lines(&csv).len(), 4);

    let (code, _, _) = call(&["--out", d, "--json", "model", "--distances", "0:1200:600"]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert_eq!(json["rows"][1]["distance"], 600);
}

#[test]
fn params_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    fs::write(&path, "t_cb = 0.1\n").unwrap();
    let (code, out, _) = call(&["--params", path.to_str().unwrap(), "model", "--distances", "600"]);
    assert_eq!(code, 0);
    assert!(out.contains("t_cb = 0.1;"));
    assert!(out.contains("# crossover_cells: 1221"));
    fs::write(&path, "t_cb = banana\n").unwrap();
    assert_eq!(call(&["--params", path.to_str().unwrap(), "model"]).0, 2);
}

#[test]
fn simulate_reports_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = call(&["--out", d, "simulate", "--grid", "3x3", "--benchmark", "qft", "--trace"]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("simulate.json")).unwrap()).unwrap();
    assert_eq!(report["instructions"], 36);
    assert!(report["makespan"].as_f64().unwrap() > 0.0);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("time_us,kind,subject"));
    assert_eq!(trace.lines().filter(|l| l.contains("InstructionComplete")).count(), 36);
}

#[test]
fn simulate_layout_file_and_mobile() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("mesh.txt");
    fs::write(&layout, "rows = 2\ncols = 3\nt = 4\ng = 4\np = 1\ncapacity = mobile\n").unwrap();
    let (code, out, err) = call(&["simulate", "--layout", layout.to_str().unwrap(), "--benchmark", "mm", "--qubits", "6"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"makespan\""));
    // Every slot filled: greedy issue wedges and the run says where.
    let (code, _, err) = call(&["simulate", "--layout", layout.to_str().unwrap(), "--benchmark", "mm", "--qubits", "12"]);
    assert_eq!(code, 1);
    assert!(err.contains("deadlock"), "{err}");
    assert_eq!(call(&["simulate", "--layout", "/nonexistent/file"]).0, 2);
}

#[test]
fn simulate_infeasible_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    fs::write(&path, "p_1q = 1e-4\np_2q = 1e-4\np_mv = 1e-4\np_ms = 1e-4\n").unwrap();
    let (code, _, err) = call(&["--params", path.to_str().unwrap(), "simulate", "--grid", "2x2"]);
    assert_eq!(code, 3);
    assert!(err.contains("infeasible"));
}

#[test]
fn sweep_is_byte_identical() {
    let args = ["sweep", "--grid", "4x4", "--t", "2,4", "--couple-tg", "--p-ratio", "1,2"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let rows = data_lines(&a);
    assert_eq!(rows[0], "t,g,p,makespan_us,normalized");
    assert_eq!(rows.last().unwrap().split(',').next_back(), Some("1.0"));
}

#[test]
fn sweep_area_mode() {
    let (code, out, err) = call(&["sweep", "--grid", "3x3", "--area", "48", "--p-ratio", "1,2,4"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("# area: 48"));
    assert_eq!(data_lines(&out).len(), 5);
}

#[test]
fn usage_errors() {
    assert_eq!(call(&[]).0, 2);
    assert_eq!(call(&["plan", "--scheme", "sideways"]).0, 2);
    assert_eq!(call(&["simulate", "--grid", "0x4"]).0, 2);
    assert_eq!(call(&["purify", "--start-fidelity", "2"]).0, 2);
    assert_eq!(call(&["simulate", "--trace"]).0, 2);
}
