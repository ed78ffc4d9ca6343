use pool_contract::mcsim::{estimate, simulate_paths, SimConfig};
use pool_contract::policy::ContractPolicy;
use pool_contract::{build_all, PoolParams, SolverSettings};

fn policy(p: &PoolParams) -> ContractPolicy {
    ContractPolicy::new(&build_all(p, &SolverSettings::default()).unwrap())
}

#[test]
fn single_loan_bank_value_is_b1() {
    let p = PoolParams {
        loans: 1,
        alpha: vec![0.25],
        ..PoolParams::reference()
    };
    let pol = policy(&p);
    let res = estimate(&p, &pol, &SimConfig::new(100_000, 12, 0.8, 1)).unwrap();
    // E[(r b + lambda b)(1 - e^{-r tau}) / r] with tau ~ Exp(lambda) equals b
    assert!(res.bank_within(0.8, 3.0), "{res:?}");
    let vbar = (1.0 - 0.8 * (0.05 + 0.25)) / 0.25;
    assert!(res.investor_within(vbar, 3.0), "{res:?}");
}

#[test]
fn patient_pool_path_invariants() {
    let p = PoolParams {
        r: 0.0,
        ..PoolParams::reference()
    };
    let pol = policy(&p);
    let cfg = SimConfig::new(20_000, 99, pol.gamma(3), 3);
    for path in simulate_paths(&p, &pol, &cfg).unwrap() {
        assert_eq!(path.defaults.len(), 3);
        assert!(path.liquidation_time.is_finite());
        let levels: Vec<usize> = path.defaults.iter().map(|d| d.level).collect();
        assert_eq!(levels, [3, 2, 1]);
        let total = path.fees_undiscounted + path.investor_payoff;
        assert!((total - path.cash_flow).abs() <= 1e-12 * path.cash_flow.max(1.0));
        assert!(path.bank_payoff >= 0.0);
    }
}

#[test]
fn liquidation_always_finite() {
    let p = PoolParams::reference();
    let pol = policy(&p);
    for u0 in [0.8, 1.3, 2.0, 3.0] {
        let cfg = SimConfig::new(5_000, 3, u0, 3);
        let paths = simulate_paths(&p, &pol, &cfg).unwrap();
        assert!(paths
            .iter()
            .all(|x| x.liquidation_time.is_finite() && !x.flagged));
        assert!(paths.iter().all(|x| x.bank_payoff >= 0.0));
    }
}

#[test]
fn misspecified_hazard_lets_shirking_pay() {
    let p = PoolParams::reference();
    let pol = policy(&p);
    let g = pol.gamma(3);
    let cfg = SimConfig {
        shirk: vec![1, 2, 3],
        shirk_epsilon: Some(1e-3),
        ..SimConfig::new(20_000, 17, g, 3)
    };
    let res = pool_contract::mcsim::deviation_utility(&p, &pol, &cfg).unwrap();
    assert!(res.mean_bank > g + 3.0 * res.se_bank, "{res:?}");
}
