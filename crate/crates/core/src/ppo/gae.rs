/// Generalized advantage estimates for one uninterrupted segment.
///
/// `bootstrap_value` is the value of the state after the last step; pass 0
/// when the segment ends in a terminal state.
pub fn gae(rewards: &[f64], values: &[f64], bootstrap_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len(), "rewards and values must align");
    let next: Vec<f64> = values.iter().skip(1).copied().chain(std::iter::once(bootstrap_value)).collect();
    gae_with_ends(rewards, values, &next, &vec![false; rewards.len()], gamma, lambda)
}

/// GAE over a rollout that may contain episode boundaries.
///
/// `next_values[t]` is the value of the successor of step `t` (zero after a
/// terminal state, the critic's estimate after a truncation) and `ends[t]`
/// marks the last step of an episode, which stops the backward accumulation.
pub fn gae_with_ends(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    ends: &[bool],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && ends.len() == n, "length mismatch");
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        if ends[t] {
            running = 0.0;
        }
        let delta = rewards[t] + gamma * next_values[t] - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    adv
}
