use crate::scalar::Scalar;

/// Below this magnitude the actor value is treated as zero.
pub const NEAR_ZERO: f64 = 1e-6;

/// Learner-side target kept close to the actor's own estimate.
///
/// Returns the target and whether it moves with `q_learner` (it does not
/// once clipped to the band edge).
pub fn preprocess_target<T: Scalar>(q_actor: T, q_learner: T, lambda: T) -> (T, bool) {
    let one = T::one();
    if q_actor.abs() < T::of(NEAR_ZERO) {
        let width = lambda * q_learner.abs().max(one);
        let (lo, hi) = (q_actor - width, q_actor + width);
        return if q_learner < lo {
            (lo, false)
        } else if q_learner > hi {
            (hi, false)
        } else {
            (q_learner, true)
        };
    }
    let ratio = q_learner / q_actor;
    let (lo, hi) = (one - lambda, one + lambda);
    if ratio < lo {
        (lo * q_actor, false)
    } else if ratio > hi {
        (hi * q_actor, false)
    } else {
        (ratio * q_actor, true)
    }
}

/// Mean squared error of clipped targets against the returns, and
/// `∂loss/∂q_learner` per row.
pub fn clipped_loss<T: Scalar>(q_actor: &[T], q_learner: &[T], rewards: &[T], lambda: T) -> (T, Vec<T>) {
    let n = T::of(q_learner.len() as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(q_learner.len());
    for ((&qa, &ql), &r) in q_actor.iter().zip(q_learner).zip(rewards) {
        let (qp, live) = preprocess_target(qa, ql, lambda);
        let d = qp - r;
        loss = loss + d * d;
        // Inside the band Q_p = (q_l / q_a) · q_a, whose slope in q_l is 1.
        grad.push(if live { (d + d) / n } else { T::zero() });
    }
    (loss / n, grad)
}
