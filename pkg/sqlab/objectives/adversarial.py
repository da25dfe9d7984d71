"""
Non-saturating adversarial losses in log-sigmoid form.

log(sigmoid(x)) = -softplus(-x) and log(1 - sigmoid(x)) = -softplus(x), so both
losses stay finite for any finite logit.
"""

from sqlab.autodiff import Tensor, reduce_mean, softplus


def adv_g(fake_logits: Tensor) -> Tensor:
    """
    Generator loss: mean of 1 - log sigmoid(f_D(g(w))).

    Args:
        fake_logits: Discriminator logits on generated samples, shape (n,)

    Returns:
        Scalar loss (tends to 1 as the logits grow)
    """
    return 1.0 + reduce_mean(softplus(-fake_logits))


def adv_d(real_logits: Tensor, fake_logits: Tensor) -> Tensor:
    """
    Discriminator loss: -mean log sigmoid(real) - mean log(1 - sigmoid(fake)).

    Args:
        real_logits: Logits on data samples
        fake_logits: Logits on generated samples

    Returns:
        Scalar loss (2 log 2 at zero logits)
    """
    return reduce_mean(softplus(-real_logits)) + reduce_mean(softplus(fake_logits))
