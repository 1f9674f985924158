"""Regenerates the golden end-to-end fixture inputs.

Outputs are checked in; rerunning with the same numpy version reproduces
them. The expected outputs under expected/ come from running the pipeline,
see the acceptance test.
"""

import struct
import wave
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent
RNG = np.random.default_rng(1)

LETTERS = list("aeiklmnorst")
VOCAB = ["<blank>"] + LETTERS
CONFUSABLE = {"e": "i", "i": "e", "o": "a", "a": "o"}

SUBJECTS = ["mala", "tiro", "kesa"]
VERBS = ["lem", "sito", "ran"]
OBJECTS = ["mela", "tero", "kisa", "nole"]
# acoustically confusable and equally likely after every verb
SHARED = ["sel", "sil"]


def sentence(rng):
    """Subject-verb agreement with one of two objects per subject."""
    i = int(rng.integers(0, len(SUBJECTS)))
    k = int(rng.integers(0, 4))
    o = OBJECTS[(i + k) % len(OBJECTS)] if k < 2 else SHARED[k - 2]
    return f"{SUBJECTS[i]} {VERBS[i]} {o}"


def write_wav(path, rate, channels, samples):
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())


def speechlike(n):
    """Gamma-shaped amplitudes with random signs."""
    return RNG.gamma(0.4, 1.0, n) * RNG.choice([-1.0, 1.0], n)


def clip(rate, seconds, snr_db, silences=()):
    n = int(rate * seconds)
    s = speechlike(n)
    for a, b in silences:
        s[int(a * rate):int(b * rate)] = 0.0
    noise = RNG.standard_normal(n)
    active = s != 0.0
    p_s = np.mean(s[active] ** 2)
    noise *= np.sqrt(p_s / 10 ** (snr_db / 10))
    # speech at about -26 dBFS
    return (s + noise) * 0.05 / np.sqrt(p_s)


def audio():
    write_wav(ROOT / "audio/hi/long.wav", 16000, 1, clip(16000, 32.0, 25.0, [(0.0, 2.0), (21.5, 22.5), (30.0, 32.0)]))
    write_wav(ROOT / "audio/hi/short.wav", 8000, 1, clip(8000, 6.0, 30.0, [(0.0, 0.5), (5.5, 6.0)]))
    write_wav(ROOT / "audio/ta/noisy.wav", 8000, 1, clip(8000, 8.0, 3.0, [(0.0, 1.0)]))
    stereo = clip(16000, 6.0, 20.0, [(0.0, 0.5), (2.0, 3.0)])
    write_wav(ROOT / "audio/ta/stereo.wav", 16000, 2, np.repeat(stereo, 2))


def emissions(text, rng):
    rows = []
    for word in text.split():
        for ch in word:
            confused = ch in CONFUSABLE and rng.random() < 0.4
            for _ in range(2):
                logits = rng.normal(0.0, 1.0, len(VOCAB))
                logits[VOCAB.index(ch)] += 5.0
                if confused:
                    logits[VOCAB.index(CONFUSABLE[ch])] = logits[VOCAB.index(ch)] + rng.normal(0.5, 0.5)
                rows.append(logits)
            blank = rng.normal(0.0, 1.0, len(VOCAB))
            blank[0] += 5.0
            rows.append(blank)
    m = np.array(rows)
    m = m - np.log(np.exp(m - m.max(axis=1, keepdims=True)).sum(axis=1, keepdims=True)) - m.max(axis=1, keepdims=True)
    return m


def write_emis(path, m):
    body = struct.pack("<5sIIIf", b"EMIS1", m.shape[0], m.shape[1], 0, 0.02)
    path.write_bytes(body + m.astype("<f4").tobytes())


def split(name, count, rng):
    d = ROOT / "emissions" / name
    d.mkdir(parents=True, exist_ok=True)
    (d / "vocab.txt").write_text("\n".join(VOCAB) + "\n")
    refs = []
    for i in range(count):
        utt = f"{name}_{i:02d}"
        text = sentence(rng)
        write_emis(d / f"{utt}.emis", emissions(text, rng))
        refs.append(f"{utt}\t{text}")
    (ROOT / f"{name}.tsv").write_text("\n".join(refs) + "\n")


def main():
    audio()
    rng = np.random.default_rng(2)
    lines = [sentence(rng) for _ in range(400)]
    (ROOT / "lm.txt").write_text("\n".join(lines) + "\n")
    split("dev", 12, rng)
    split("test", 12, rng)


if __name__ == "__main__":
    main()
