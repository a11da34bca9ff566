"""Analytic symbol and operation counts (no simulation)."""
from __future__ import annotations

import math

import numpy as np

from ..baselines.convcode import GENERATORS, MEMORY, RATE_INV
from ..baselines.modulation import BITS_PER_SYMBOL
from ..baselines.source import HEADER_BITS
from ..transceivers import IRConfig, MTConfig, VQAConfig

NUM_STATES = 1 << MEMORY


def dense_ops(a: int, b: int) -> tuple[int, int]:
    """(multiplications, additions) for one ``a -> b`` affine layer on one input row."""
    return b * a, b * (a - 1) + b


def stack_ops(widths: list[int]) -> tuple[int, int]:
    mults = adds = 0
    for a, b in zip(widths[:-1], widths[1:]):
        m, s = dense_ops(a, b)
        mults += m
        adds += s
    return mults, adds


def baseline_symbols(payload_bits: int, scheme: str) -> int:
    """Channel uses for one payload through the reference link (header, rate-1/3 code, tail bits)."""
    coded = RATE_INV * (payload_bits + MEMORY)
    return math.ceil(coded / BITS_PER_SYMBOL[scheme])


def image_payload_bits(h: int, w: int, c: int) -> int:
    return 3 * HEADER_BITS + 8 * h * w * c


def text_payload_bits(num_bytes: float) -> float:
    return HEADER_BITS + 8 * num_bytes


def conv_encoder_ops(num_bits: int) -> tuple[int, int]:
    """XOR count (as additions) of the shift-register encoder, tail included."""
    steps = num_bits + MEMORY
    per_step = sum(bin(g).count("1") - 1 for g in GENERATORS)
    return 0, steps * per_step


def viterbi_ops(num_bits: int) -> tuple[int, int]:
    """Soft-decision Viterbi over ``num_bits + MEMORY`` trellis steps.

    Per step: correlations for the ``2**n`` distinct output words
    (``n`` multiplications and ``n - 1`` additions each), then two additions
    and one comparison per state for add-compare-select.
    """
    steps = num_bits + MEMORY
    words = 1 << RATE_INV
    mults = words * RATE_INV
    adds = words * (RATE_INV - 1) + NUM_STATES * 3
    return steps * mults, steps * adds


def account_symbols(task: str, model_cfg, scheme: str = "qpsk", mean_tokens: float | None = None,
                    text_bytes: float | None = None) -> dict:
    """Symbols per sample for the semantic system and the bit-level reference, with their ratio.

    ``mean_tokens`` is the average number of non-pad source tokens (text
    tasks) and ``text_bytes`` the average UTF-8 size of the rendered text;
    both default to the configuration's maximum length where needed.
    """
    rows = []
    if task == "ir":
        c: IRConfig = model_cfg
        sem = c.L_C
        base = baseline_symbols(image_payload_bits(c.image_size, c.image_size, c.channels), scheme)
        rows.append({"item": "image", "semantic": sem, "baseline": base})
    elif task == "mt":
        c: MTConfig = model_cfg
        tokens = c.max_len if mean_tokens is None else mean_tokens
        sem = tokens * c.L_C
        nbytes = text_bytes if text_bytes is not None else tokens * 5
        base = math.ceil(RATE_INV * (text_payload_bits(nbytes) + MEMORY) / BITS_PER_SYMBOL[scheme])
        rows.append({"item": "sentence", "semantic": sem, "baseline": base})
    elif task == "vqa":
        c: VQAConfig = model_cfg
        img = c.image_tokens * c.L_C_img
        tokens = c.max_question_len if mean_tokens is None else mean_tokens
        txt = (tokens + 1) * c.L_C_txt
        rows.append({"item": "image", "semantic": img,
                     "baseline": baseline_symbols(image_payload_bits(c.image_size, c.image_size, c.channels), scheme)})
        nbytes = text_bytes if text_bytes is not None else tokens * 5
        rows.append({"item": "question", "semantic": txt,
                     "baseline": math.ceil(RATE_INV * (text_payload_bits(nbytes) + MEMORY) / BITS_PER_SYMBOL[scheme])})
    else:
        raise ValueError(f"unknown task {task!r}")
    for r in rows:
        r["ratio"] = r["semantic"] / r["baseline"]
    return {"task": task, "scheme": scheme, "rows": rows}


def _jsc_widths(d: int, hidden: list[int], L_C: int) -> tuple[list[int], list[int]]:
    return [d, *hidden, 2 * L_C], [2 * L_C, *reversed(hidden), d]


def account_ops(task: str, model_cfg, payload_bits: int | None = None, rows_per_sample: float | None = None) -> dict:
    """Multiplications and additions of the JSC codecs next to the reference channel codec.

    Counts are per sample: the JSC stacks run once per transmitted row
    (``rows_per_sample``) and the channel codec once over ``payload_bits``.
    """
    c = model_cfg
    if task == "ir":
        enc_w, dec_w = _jsc_widths(c.d_model, c.jsc_hidden, c.L_C)
        rows = 1 if rows_per_sample is None else rows_per_sample
        bits = image_payload_bits(c.image_size, c.image_size, c.channels) if payload_bits is None else payload_bits
        parts = [(enc_w, dec_w, rows)]
    elif task == "mt":
        enc_w, dec_w = _jsc_widths(c.d_model, c.jsc_hidden, c.L_C)
        rows = c.max_len if rows_per_sample is None else rows_per_sample
        bits = int(text_payload_bits(c.max_len * 5)) if payload_bits is None else payload_bits
        parts = [(enc_w, dec_w, rows)]
    elif task == "vqa":
        img = _jsc_widths(c.d_img, c.jsc_hidden, c.L_C_img)
        txt = _jsc_widths(c.d_model, c.jsc_hidden, c.L_C_txt)
        q_rows = c.text_tokens if rows_per_sample is None else rows_per_sample
        bits = image_payload_bits(c.image_size, c.image_size, c.channels) if payload_bits is None else payload_bits
        parts = [(img[0], img[1], c.image_tokens), (txt[0], txt[1], q_rows)]
    else:
        raise ValueError(f"unknown task {task!r}")
    enc = np.zeros(2)
    dec = np.zeros(2)
    for enc_w, dec_w, n in parts:
        enc += np.array(stack_ops(enc_w)) * n
        dec += np.array(stack_ops(dec_w)) * n
    ce = conv_encoder_ops(bits)
    vd = viterbi_ops(bits)
    table = [
        {"method": "semantic JSC", "part": "encoder", "multiplications": float(enc[0]), "additions": float(enc[1])},
        {"method": "semantic JSC", "part": "decoder", "multiplications": float(dec[0]), "additions": float(dec[1])},
        {"method": "conv+Viterbi", "part": "encoder", "multiplications": float(ce[0]), "additions": float(ce[1])},
        {"method": "conv+Viterbi", "part": "decoder", "multiplications": float(vd[0]), "additions": float(vd[1])},
    ]
    return {"task": task, "payload_bits": bits, "rows": table}


def format_table(report: dict) -> str:
    """Plain-text rendering of an ``account_ops`` or ``account_symbols`` report."""
    rows = report["rows"]
    keys = list(rows[0])
    widths = [max(len(k), *(len(_cell(r[k])) for r in rows)) for k in keys]
    line = "  ".join(k.ljust(w) for k, w in zip(keys, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    for r in rows:
        out.append("  ".join(_cell(r[k]).ljust(w) for k, w in zip(keys, widths)))
    return "\n".join(out)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}" if not v.is_integer() else f"{int(v)}"
    return str(v)
