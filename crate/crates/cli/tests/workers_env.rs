//! Environment handling lives in its own binary: the variable is process-wide.

use horseshoe_cli::{config::WORKERS_ENV, run};

fn code(args: &[&str]) -> i32 {
    let argv = std::iter::once("horseshoe").chain(args.iter().copied());
    run(argv, &mut Vec::new(), &mut Vec::new())
}

#[test]
fn worker_variable_is_validated_and_overridden_by_the_flag() {
    let args = ["schedule", "--A", "3", "--h", "1", "--eps", "0.1"];
    std::env::set_var(WORKERS_ENV, "two");
    assert_eq!(code(&args), 2);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--workers", "1"]);
    assert_eq!(code(&with_flag), 0);
    std::env::set_var(WORKERS_ENV, "1");
    assert_eq!(code(&args), 0);
    std::env::remove_var(WORKERS_ENV);
}
