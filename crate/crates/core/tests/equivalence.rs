use ghosttrace::harness::{check_equivalence, generate_program, GeneratorConfig, Population};
use ghosttrace::lang::load;
use ghosttrace::runtime::{interpret, Mode};
use ghosttrace::transform::transform_program;

/// Returns whether the instrumented run raised any NPE.
fn check(seed: u64, population: Population) -> bool {
    let cfg = GeneratorConfig { population, ..GeneratorConfig::default() };
    let src = generate_program(seed, cfg);
    let p = load(&src, "gen.mini").unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
    let (q, _) = transform_program(&p).unwrap();
    let verdict = check_equivalence(&p, &q).unwrap();
    assert!(verdict.equal, "seed {seed}: {}\n{src}", verdict.describe());
    let run = interpret(&q, Mode::Instrumented).unwrap();
    assert_eq!(run.ghost_leaks, 0, "seed {seed}");
    assert!(run.events.is_well_nested(), "seed {seed}");
    !run.npe_reports.is_empty()
}

#[test]
fn ghost_free_programs_behave_identically() {
    for seed in 0..250 {
        assert!(!check(seed, Population::GhostFree), "seed {seed}");
    }
}

#[test]
fn null_bearing_programs_behave_identically() {
    let raising = (0..250).filter(|&seed| check(seed, Population::NullBearing)).count();
    assert!(raising >= 25, "only {raising} programs exercised a null");
}

#[test]
fn ghost_free_programs_create_no_observable_ghost() {
    let cfg = GeneratorConfig::default();
    for seed in 0..50 {
        let p = load(&generate_program(seed, cfg), "gen.mini").unwrap();
        let (q, _) = transform_program(&p).unwrap();
        let run = interpret(&q, Mode::Instrumented).unwrap();
        assert!(run.npe_reports.is_empty(), "seed {seed}");
        assert!(matches!(run.outcome, ghosttrace::Outcome::Normal(_)), "seed {seed}: {:?}", run.outcome);
    }
}
