"""Desk-scale simulation lab for the Y-00 quantum stream cipher.

A shared secret key is expanded into a per-slot choice among M two-point
communication bases; the transmitted signal is one of 2M mutually
non-orthogonal coherent states, so a receiver without the key faces an
ultra-multi-valued discrimination problem that quantum measurement noise
masks, while the keyed receiver makes an easy binary decision.  The package
models that physical layer under the Gaussian approximation and measures the
resulting security margins: error rates, Holevo-Yuen detection quantities,
equivocation, and concrete attack outcomes.
"""

from .attacks import (
    AttackReport,
    KpaCandidate,
    TOY_CORPUS,
    intercept_resend_attack,
    known_plaintext_key_search,
    otp_falsification_demo,
    otp_partial_kpa_demo,
    record_ciphertext_attack,
)
from .channel import (
    ChannelModel,
    MeasurementOutcome,
    measure_heterodyne,
    measure_homodyne,
    propagate_loss,
)
from .config import ExperimentConfig, load_config
from .keystream import derive_trial_seed, expand_key, key_bits, random_key
from .metrics import (
    BerReport,
    EquivocationReport,
    StateEnsemble,
    coherent_overlap,
    estimate_equivocation,
    gram_eigenvalues,
    helstrom_binary,
    holevo_chi,
    masking_number,
    q_function,
    ring_ensemble,
    run_ber_experiment,
)
from .modulation import (
    Constellation,
    QuantumCiphertext,
    amplitude_of,
    draw_dsr,
    encrypt_stream,
    map_index,
)
from .receivers import (
    EveObservation,
    bit_given_key,
    bob_decode,
    eve_keyless_bit,
    eve_nearest_index,
)

__version__ = "0.1.0"
