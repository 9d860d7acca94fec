use pdwg_demo::{convergence_csv, list_cases, mesh_edges, solve_samples};

#[test]
fn lists_every_builtin_case() {
    let text = list_cases();
    assert_eq!(text.lines().count(), pdwg::cases::case_ids().len());
    assert!(text.lines().any(|l| l.starts_with("c1_tri_sq\t") && l.ends_with("\texact")));
}

#[test]
fn samples_come_in_triples() {
    let v = solve_samples("fig_rotation", 1, 1.0, 1.0, 2, 2).unwrap_or_else(|_| panic!("solve failed"));
    assert_eq!(v.len(), 3 * 32 * 4);
    assert!(v.iter().all(|x| x.is_finite()));
}

#[test]
fn convergence_table_rows() {
    let csv = convergence_csv("c1_tri_sq", 1, 1.0, 1.0, 2).unwrap_or_else(|_| panic!("convergence failed"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn edges_carry_inflow_flags() {
    let v = mesh_edges("c1_tri_sq", 0).unwrap_or_else(|_| panic!("mesh failed"));
    assert_eq!(v.len(), 5 * 5);
    let inflow = v.chunks(5).filter(|r| r[4] == 1.0).count();
    assert_eq!(inflow, 2);
}
