use siegel_core::selftest::{run_all, SelftestConfig};

#[test]
fn acceptance_criteria() {
    let results = run_all(&SelftestConfig::default());
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
