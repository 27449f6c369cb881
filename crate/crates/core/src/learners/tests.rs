use super::*;
use crate::model::FeatureVector;

fn sample(phi: &[f64], reward: f64, phi_next: &[f64], rho: f64) -> TransitionSample {
    TransitionSample {
        phi: FeatureVector::new(phi.to_vec()).unwrap(),
        action: 0,
        reward,
        phi_next: FeatureVector::new(phi_next.to_vec()).unwrap(),
        rho,
        state_index: 0,
        next_state_index: 0,
        episode_end: false,
    }
}

fn hp(alpha: f64, lambda: f64, gamma: f64) -> Hyperparams {
    Hyperparams::new(alpha, 1.0, lambda, gamma).unwrap()
}

/// Small deterministic pseudo-random stream (LCG) so these tests do not
/// depend on the environment module.
fn stream(n: usize, d: usize, gamma_zero_next: bool, seed: u64) -> Vec<TransitionSample> {
    let mut x = seed;
    let mut next = move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    };
    (0..n)
        .map(|i| {
            let phi: Vec<f64> = (0..d).map(|_| next()).collect();
            let phin: Vec<f64> = (0..d)
                .map(|_| if gamma_zero_next { 0.0 } else { next() })
                .collect();
            let mut s = sample(&phi, next(), &phin, 1.0 + next());
            s.episode_end = i % 7 == 6;
            s
        })
        .collect()
}

#[test]
fn setd_hand_case() {
    let mut st = LearnerState::new(Algorithm::Setd, 1);
    let out = st.step(&sample(&[1.0], 1.0, &[0.0], 1.0), &hp(0.1, 0.0, 0.9)).unwrap();
    assert_eq!(out.delta, 1.0);
    assert_eq!(out.omega, 1.0);
    assert!((st.theta()[0] - 0.1).abs() < 1e-15);
    assert_eq!(st.step_count(), 1);
}

#[test]
fn setd_zero_rho_leaves_theta() {
    let mut st = LearnerState::with_theta(Algorithm::Setd, vec![0.7]);
    st.step(&sample(&[1.0], 5.0, &[0.0], 0.0), &hp(0.5, 0.0, 0.9)).unwrap();
    assert_eq!(st.theta(), &[0.7]);
}

#[test]
fn setd_zero_omega_leaves_theta() {
    // left state of the two-state MDP: φ = 1, φ′ = 2, γ = 0.9
    let mut st = LearnerState::with_theta(Algorithm::Setd, vec![3.0]);
    let out = st.step(&sample(&[1.0], 0.0, &[2.0], 2.0), &hp(0.5, 0.0, 0.9)).unwrap();
    assert_eq!(out.omega, 0.0);
    assert!(out.delta != 0.0);
    assert_eq!(st.theta(), &[3.0]);
}

#[test]
fn setd_lambda_starts_with_zero_trace() {
    let st = LearnerState::new(Algorithm::SetdLambda, 3);
    assert_eq!(st.trace(), &[0.0, 0.0, 0.0]);
}

#[test]
fn setd_lambda_two_step_trace() {
    let h = hp(0.1, 0.5, 0.9);
    let mut st = LearnerState::new(Algorithm::SetdLambda, 1);
    // φ′ = 0 makes Δφ = φ, so ω = 1 on both steps
    let o1 = st.step(&sample(&[1.0], 0.0, &[0.0], 1.0), &h).unwrap();
    let o2 = st.step(&sample(&[2.0], 0.0, &[0.0], 1.0), &h).unwrap();
    assert_eq!((o1.omega, o2.omega), (1.0, 1.0));
    assert!((st.trace()[0] - 2.45).abs() < 1e-14);
}

#[test]
fn setd_lambda_zero_matches_setd_bitwise() {
    let h = hp(0.05, 0.0, 0.9);
    let mut a = LearnerState::new(Algorithm::Setd, 4);
    let mut b = LearnerState::new(Algorithm::SetdLambda, 4);
    for s in stream(2000, 4, false, 11) {
        a.step(&s, &h).unwrap();
        b.step(&s, &h).unwrap();
        let ta: Vec<u64> = a.theta().iter().map(|x| x.to_bits()).collect();
        let tb: Vec<u64> = b.theta().iter().map(|x| x.to_bits()).collect();
        assert_eq!(ta, tb);
    }
}

#[test]
fn setd_lambda_trace_cleared_at_episode_end() {
    let h = hp(0.1, 0.8, 0.9);
    let mut st = LearnerState::new(Algorithm::SetdLambda, 2);
    let mut s = sample(&[1.0, 0.5], 1.0, &[0.0, 0.0], 1.0);
    s.episode_end = true;
    st.step(&s, &h).unwrap();
    assert_eq!(st.trace(), &[0.0, 0.0]);
    assert!(st.theta()[0] != 0.0);
}

#[test]
fn td_hand_case() {
    let mut st = LearnerState::new(Algorithm::Td, 1);
    st.step(&sample(&[1.0], 1.0, &[0.0], 1.0), &hp(0.1, 0.0, 0.9)).unwrap();
    assert!((st.theta()[0] - 0.1).abs() < 1e-15);
}

#[test]
fn td_ignores_lambda_but_td_lambda_uses_it() {
    let h = hp(0.1, 0.9, 0.9);
    let stream = stream(50, 3, false, 5);
    let mut td = LearnerState::new(Algorithm::Td, 3);
    let mut td0 = LearnerState::new(Algorithm::TdLambda, 3);
    let mut tdl = LearnerState::new(Algorithm::TdLambda, 3);
    let h0 = Hyperparams { lambda: 0.0, ..h };
    for s in &stream {
        td.step(s, &h).unwrap();
        td0.step(s, &h0).unwrap();
        tdl.step(s, &h).unwrap();
    }
    for (a, b) in td.theta().iter().zip(td0.theta()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(td.theta() != tdl.theta());
}

#[test]
fn gamma_zero_setd_equals_td_bitwise() {
    let h = hp(0.05, 0.0, 0.0);
    let mut setd = LearnerState::new(Algorithm::Setd, 5);
    let mut td = LearnerState::new(Algorithm::Td, 5);
    for s in stream(2000, 5, false, 3) {
        let o = setd.step(&s, &h).unwrap();
        td.step(&s, &h).unwrap();
        assert_eq!(o.omega, 1.0);
        assert_eq!(setd.theta(), td.theta());
    }
}

#[test]
fn td_and_setd_agree_where_omega_is_one() {
    // φ′ = 0 gives Δφ = φ and ω = 1 for any γ
    let h = hp(0.05, 0.0, 0.9);
    let mut setd = LearnerState::new(Algorithm::Setd, 3);
    let mut td = LearnerState::new(Algorithm::Td, 3);
    for s in stream(500, 3, true, 9) {
        setd.step(&s, &h).unwrap();
        td.step(&s, &h).unwrap();
    }
    assert_eq!(setd.theta(), td.theta());
}

#[test]
fn etd_followon_sequence() {
    let h = hp(0.01, 0.0, 0.9);
    let mut st = LearnerState::new(Algorithm::Etd, 1);
    assert_eq!(st.followon(), 1.0);
    // two-state MDP, right action taken repeatedly: 1 -> 2 -> 2 -> 2
    let mut s = sample(&[1.0], 0.0, &[2.0], 2.0);
    s.state_index = 0;
    s.next_state_index = 1;
    let mut f = vec![st.followon()];
    st.step(&s, &h).unwrap();
    f.push(st.followon());
    let mut s = sample(&[2.0], 0.0, &[2.0], 2.0);
    s.state_index = 1;
    s.next_state_index = 1;
    st.step(&s, &h).unwrap();
    f.push(st.followon());
    assert!((f[0] - 1.0).abs() < 1e-15);
    assert!((f[1] - 2.8).abs() < 1e-14);
    assert!((f[2] - 6.04).abs() < 1e-13);
}

#[test]
fn etd_first_step_uses_unit_followon() {
    let h = hp(0.1, 0.0, 0.9);
    let mut st = LearnerState::new(Algorithm::Etd, 1);
    st.step(&sample(&[1.0], 1.0, &[0.0], 1.0), &h).unwrap();
    assert!((st.theta()[0] - 0.1).abs() < 1e-15);
}

#[test]
fn etd_zero_rho_resets_followon() {
    let h = hp(0.1, 0.0, 0.9);
    let mut st = LearnerState::new(Algorithm::Etd, 1);
    st.step(&sample(&[1.0], 0.0, &[1.0], 2.0), &h).unwrap();
    assert!(st.followon() > 1.0);
    st.step(&sample(&[1.0], 0.0, &[1.0], 0.0), &h).unwrap();
    assert_eq!(st.followon(), 1.0);
}

#[test]
fn etd_rejects_unchained_samples() {
    let h = hp(0.1, 0.0, 0.9);
    let mut st = LearnerState::new(Algorithm::Etd, 1);
    let mut a = sample(&[1.0], 0.0, &[1.0], 1.0);
    a.state_index = 0;
    a.next_state_index = 1;
    st.step(&a, &h).unwrap();
    let mut b = a.clone();
    b.state_index = 3;
    assert!(matches!(st.step(&b, &h), Err(Error::ContractViolation(_))));
}

#[test]
fn etd_episode_end_resets_followon() {
    let h = hp(0.1, 0.0, 1.0);
    let mut st = LearnerState::new(Algorithm::Etd, 1);
    let mut s = sample(&[1.0], -1.0, &[0.0], 1.0);
    st.step(&s, &h).unwrap();
    assert_eq!(st.followon(), 2.0);
    s.episode_end = true;
    st.step(&s, &h).unwrap();
    assert_eq!(st.followon(), 1.0);
}

#[test]
fn gtd2_zero_w_leaves_theta() {
    let h = Hyperparams::new(0.1, 2.0, 0.0, 0.9).unwrap();
    let mut st = LearnerState::with_theta(Algorithm::Gtd2, vec![1.0, -2.0]);
    st.step(&sample(&[1.0, 0.5], 3.0, &[0.2, 0.1], 1.5), &h).unwrap();
    assert_eq!(st.theta(), &[1.0, -2.0]);
    assert!(st.w().iter().any(|&x| x != 0.0));
}

#[test]
fn gradient_methods_zero_rho_unchanged() {
    let h = Hyperparams::new(0.1, 2.0, 0.0, 0.9).unwrap();
    for alg in [Algorithm::Gtd2, Algorithm::Tdc] {
        let mut st = LearnerState::with_theta(alg, vec![1.0, -2.0]);
        st.step(&sample(&[1.0, 0.5], 3.0, &[0.2, 0.1], 0.0), &h).unwrap();
        assert_eq!(st.theta(), &[1.0, -2.0]);
        assert_eq!(st.w(), &[0.0, 0.0]);
    }
}

#[test]
fn gtd2_hand_case() {
    let h = Hyperparams::new(0.1, 2.0, 0.0, 0.5).unwrap();
    let mut st = LearnerState::with_theta(Algorithm::Gtd2, vec![1.0]);
    st.set_w(vec![0.5]).unwrap();
    // δ = 1 + 0.5·1·1 − 2·1 = −0.5, φᵀw = 1
    st.step(&sample(&[2.0], 1.0, &[1.0], 2.0), &h).unwrap();
    // θ = 1 + 0.1·2·(2 − 0.5)·1 = 1.3
    assert!((st.theta()[0] - 1.3).abs() < 1e-14);
    // w = 0.5 + 0.2·(2·(−0.5) − 1)·2 = −0.3
    assert!((st.w()[0] + 0.3).abs() < 1e-14);
}

#[test]
fn tdc_hand_case() {
    let h = Hyperparams::new(0.1, 2.0, 0.0, 0.5).unwrap();
    let mut st = LearnerState::with_theta(Algorithm::Tdc, vec![1.0]);
    st.set_w(vec![0.5]).unwrap();
    st.step(&sample(&[2.0], 1.0, &[1.0], 2.0), &h).unwrap();
    // θ = 1 + 0.1·2·(−0.5·2 − 0.5·1·1) = 0.7
    assert!((st.theta()[0] - 0.7).abs() < 1e-14);
    assert!((st.w()[0] + 0.3).abs() < 1e-14);
}

#[test]
fn tdc_zero_w_matches_td0() {
    let h = Hyperparams::new(0.05, 1.0, 0.0, 0.9).unwrap();
    let s = sample(&[1.0, -0.5], 2.0, &[0.3, 0.2], 1.7);
    let mut tdc = LearnerState::with_theta(Algorithm::Tdc, vec![0.2, 0.4]);
    let mut td = LearnerState::with_theta(Algorithm::Td, vec![0.2, 0.4]);
    tdc.step(&s, &h).unwrap();
    td.step(&s, &h).unwrap();
    for (a, b) in tdc.theta().iter().zip(td.theta()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn reset_clears_traces_only() {
    let h = hp(0.1, 0.9, 0.9);
    let mut st = LearnerState::new(Algorithm::SetdLambda, 2);
    st.step(&sample(&[1.0, 2.0], 1.0, &[0.0, 0.0], 1.0), &h).unwrap();
    let theta = st.theta().to_vec();
    assert!(st.trace().iter().any(|&e| e != 0.0));
    st.reset();
    assert_eq!(st.trace(), &[0.0, 0.0]);
    assert_eq!(st.followon(), 1.0);
    assert_eq!(st.theta(), theta.as_slice());

    let mut etd = LearnerState::new(Algorithm::Etd, 1);
    etd.step(&sample(&[1.0], 0.0, &[1.0], 2.0), &h).unwrap();
    etd.reset();
    assert_eq!(etd.followon(), 1.0);
}

#[test]
fn wrong_algorithm_is_contract_violation() {
    let mut st = LearnerState::new(Algorithm::Td, 1);
    let r = setd_step(&mut st, &sample(&[1.0], 0.0, &[0.0], 1.0), &hp(0.1, 0.0, 0.9));
    assert!(matches!(r, Err(Error::ContractViolation(_))));
}

#[test]
fn dimension_mismatch_rejected() {
    let mut st = LearnerState::new(Algorithm::Setd, 2);
    let r = st.step(&sample(&[1.0], 0.0, &[0.0], 1.0), &hp(0.1, 0.0, 0.9));
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn divergence_freezes_state() {
    let h = hp(1.0, 0.0, 0.9);
    let mut st = LearnerState::with_theta(Algorithm::Td, vec![1.0]);
    let s = sample(&[1.0], 1e9, &[0.0], 1.0);
    let out = st.step(&s, &h).unwrap();
    assert!(out.diverged && st.diverged());
    let theta = st.theta().to_vec();
    let again = st.step(&s, &h).unwrap();
    assert!(again.diverged && again.delta.is_nan());
    assert_eq!(st.theta(), theta.as_slice());
    assert_eq!(st.step_count(), 1);
}

#[test]
fn hyperparams_ranges() {
    assert!(Hyperparams::new(0.0, 1.0, 0.0, 0.9).is_err());
    assert!(Hyperparams::new(1.5, 1.0, 0.0, 0.9).is_err());
    assert!(Hyperparams::new(0.5, -1.0, 0.0, 0.9).is_err());
    assert!(Hyperparams::new(0.5, 1.0, 1.1, 0.9).is_err());
    assert!(Hyperparams::new(1.0, 0.0, 1.0, 1.0).is_ok());
}

#[test]
fn algorithm_names_round_trip() {
    for alg in Algorithm::ALL {
        assert_eq!(alg.name().parse::<Algorithm>().unwrap(), alg);
    }
    assert_eq!("SETD(lambda)".parse::<Algorithm>().unwrap(), Algorithm::SetdLambda);
    assert!("q_learning".parse::<Algorithm>().is_err());
}

#[test]
fn deterministic_given_stream() {
    let h = Hyperparams::new(0.05, 0.5, 0.4, 0.9).unwrap();
    for alg in Algorithm::ALL {
        let run = || {
            let mut st = LearnerState::new(alg, 3);
            for s in stream(300, 3, false, 21) {
                let mut s = s;
                s.state_index = 0;
                s.next_state_index = 0;
                st.step(&s, &h).unwrap();
            }
            st
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn per_step_cost_is_linear_in_dimension() {
    let h = Hyperparams::new(0.01, 1.0, 0.5, 0.9).unwrap();
    for alg in Algorithm::ALL {
        let per_dim: Vec<f64> = [10usize, 100, 1000]
            .iter()
            .map(|&d| {
                let samples = stream(20, d, false, 1);
                let mut st = LearnerState::new(alg, d);
                kernels::take_touched();
                for mut s in samples {
                    s.episode_end = false;
                    st.step(&s, &h).unwrap();
                }
                kernels::take_touched() as f64 / (20 * d) as f64
            })
            .collect();
        assert!(per_dim[0] > 0.0);
        assert_eq!(per_dim[0], per_dim[1], "{alg}: {per_dim:?}");
        assert_eq!(per_dim[1], per_dim[2], "{alg}: {per_dim:?}");
    }
}
