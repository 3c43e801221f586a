/**
 * Training objectives: discretized-logistic negative log-likelihood of the
 * shifted residual (in bits, same bin convention as the codec: unit bins
 * with tail-absorbing edges) plus the vector-quantization loss with a
 * straight-through gradient path.
 */

import * as tf from "@tensorflow/tfjs";

import { stopGradient } from "./model";

const LOG2E = Math.LOG2E;

/**
 * Mean bits per value of residual targets t under per-pixel logistic (mu, s).
 * t, mu, s share one shape; t holds integer values in [0, 255].
 */
export function nllBits(t: tf.Tensor, mu: tf.Tensor, s: tf.Tensor): tf.Scalar {
  return tf.tidy(() => {
    const zUp = tf.div(tf.sub(tf.add(t, 0.5), mu), s);
    const zLo = tf.div(tf.sub(tf.sub(t, 0.5), mu), s);
    const isLo = tf.equal(t, 0);
    const isHi = tf.equal(t, 255);
    let mass = tf.sub(tf.sigmoid(zUp), tf.sigmoid(zLo));
    mass = tf.where(isLo, tf.sigmoid(zUp), mass);
    // 1 - sigmoid(z) cancels in float32; sigmoid(-z) is the same tail exactly
    mass = tf.where(isHi, tf.sigmoid(tf.neg(zLo)), mass);
    mass = tf.maximum(mass, 1e-12);
    return tf.mul(-LOG2E, tf.mean(tf.log(mass))) as tf.Scalar;
  });
}

/** ||sg(zHat) - zQ||^2 + beta ||zHat - sg(zQ)||^2, mean squared. */
export function vqLoss(zHat: tf.Tensor, zQ: tf.Tensor, beta: number): tf.Scalar {
  return tf.tidy(() => {
    const codebookTerm = tf.mean(tf.square(tf.sub(stopGradient(zHat), zQ)));
    const commitTerm = tf.mean(tf.square(tf.sub(zHat, stopGradient(zQ))));
    return tf.add(codebookTerm, tf.mul(beta, commitTerm)) as tf.Scalar;
  });
}

export function totalLoss(
  nll: tf.Scalar,
  vq: tf.Scalar,
  alpha: number,
): tf.Scalar {
  return tf.add(nll, tf.mul(alpha, vq)) as tf.Scalar;
}
