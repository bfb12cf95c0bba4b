"""
Sentence decoder: per-kind attention over the encoded graph, triplet-level
fusion, and a two-layer LSTM language model with greedy, beam and sampled
decoding.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from corpus.vocabulary import BOS_ID, EOS_ID, PAD_ID
from errors import DecodeError
from processing.cleaner import MAX_CAPTION_LENGTH

VARIANTS = ("avg", "att-shared", "att")
KINDS = ("objects", "relations", "attributes")
ATTENTION_INIT_RANGE = 0.1


# ---------------- attention & fusion ----------------

def attend(features: torch.Tensor, weight: Optional[torch.Tensor] = None,
           mask: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Attention-pool a feature set.

    Args:
        features: (N, d) for one set or (B, N, d) for a padded batch
        weight: (d,) attention vector; None pools with the plain mean
        mask: (B, N) boolean mask of real rows for a padded batch

    Returns:
        (pooled, alpha): (d,) or (B, d) pooled vectors and the weights
    """
    single = features.dim() == 2
    if single:
        features = features.unsqueeze(0)
        mask = None if mask is None else mask.unsqueeze(0)
    if features.shape[1] == 0:
        raise DecodeError("cannot attend over an empty feature set")
    if mask is None:
        mask = torch.ones(features.shape[:2], dtype=torch.bool)
    if not bool(mask.any(dim=1).all()):
        raise DecodeError("cannot attend over an empty feature set")

    if weight is None:
        alpha = mask.to(features.dtype)
        alpha = alpha / alpha.sum(dim=1, keepdim=True)
    else:
        if weight.shape[-1] != features.shape[-1]:
            raise DecodeError(f"attention vector has dim {weight.shape[-1]}, features have {features.shape[-1]}")
        scores = features @ weight
        scores = scores.masked_fill(~mask, float("-inf"))
        alpha = torch.softmax(scores, dim=1)

    pooled = torch.bmm(alpha.unsqueeze(1), features).squeeze(1)
    if single:
        return pooled.squeeze(0), alpha.squeeze(0)
    return pooled, alpha


@dataclass
class DecodeState:
    h1: torch.Tensor
    c1: torch.Tensor
    h2: torch.Tensor
    c2: torch.Tensor
    token: torch.Tensor

    def select(self, rows: torch.Tensor) -> "DecodeState":
        return DecodeState(self.h1[rows], self.c1[rows], self.h2[rows], self.c2[rows], self.token[rows])


# ---------------- decoder ----------------

class SentenceDecoder(nn.Module):
    def __init__(self, vocab_size: int, d_x: int = 64, d_f: int = 64, d_e: int = 64, d_h: int = 64,
                 variant: str = "att"):
        super().__init__()
        if variant not in VARIANTS:
            raise DecodeError(f"unknown decoder variant {variant!r}; expected one of {VARIANTS}")
        if d_f != d_x:
            raise DecodeError(f"d_f ({d_f}) must equal d_x ({d_x}): attention pools encoder features")
        self.vocab_size = vocab_size
        self.variant = variant
        self.d_f, self.d_h = d_f, d_h

        if variant == "att":
            self.w_o = nn.Parameter(torch.empty(d_x))
            self.w_r = nn.Parameter(torch.empty(d_x))
            self.w_a = nn.Parameter(torch.empty(d_x))
        elif variant == "att-shared":
            self.w = nn.Parameter(torch.empty(d_x))
        for p in self.attention_parameters():
            nn.init.uniform_(p, -ATTENTION_INIT_RANGE, ATTENTION_INIT_RANGE)

        self.g_ora = nn.Sequential(nn.Linear(3 * d_f, d_f), nn.ReLU())
        self.word_embed = nn.Embedding(vocab_size, d_e)
        self.lstm1 = nn.LSTMCell(d_e, d_h)
        self.lstm2 = nn.LSTMCell(d_f + d_h, d_h)
        self.output = nn.Linear(d_h, vocab_size, bias=False)

    def attention_parameters(self) -> List[nn.Parameter]:
        if self.variant == "att":
            return [self.w_o, self.w_r, self.w_a]
        if self.variant == "att-shared":
            return [self.w]
        return []

    def attention_vector(self, kind: str) -> Optional[torch.Tensor]:
        if self.variant == "avg":
            return None
        if self.variant == "att-shared":
            return self.w
        return {"objects": self.w_o, "relations": self.w_r, "attributes": self.w_a}[kind]

    def pool(self, features) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Attended (f_o, f_r, f_a), each (B, d_f), from batched GraphFeatures."""
        pooled = []
        for kind in KINDS:
            values, mask = features.padded(kind)
            pooled.append(attend(values, self.attention_vector(kind), mask)[0])
        return tuple(pooled)

    def fuse(self, f_o: torch.Tensor, f_r: torch.Tensor, f_a: torch.Tensor) -> torch.Tensor:
        for name, f in (("f_o", f_o), ("f_r", f_r), ("f_a", f_a)):
            if f.shape[-1] != self.d_f:
                raise DecodeError(f"{name} has dim {f.shape[-1]}, expected {self.d_f}")
        return self.g_ora(torch.cat([f_o, f_r, f_a], dim=-1))

    # ---------------- recurrence ----------------

    def init_state(self, f_ora: torch.Tensor) -> DecodeState:
        batch = f_ora.shape[0]
        zeros = f_ora.new_zeros((batch, self.d_h))
        bos = torch.full((batch,), BOS_ID, dtype=torch.long)
        return DecodeState(zeros, zeros, zeros, zeros, bos)

    def step(self, f_ora: torch.Tensor, state: DecodeState,
             prev_token: Optional[torch.Tensor] = None) -> Tuple[torch.Tensor, DecodeState]:
        """
        One decoding step.

        Args:
            f_ora: (B, d_f) triplet embedding, fed at every step
            state: hidden and cell states of both layers
            prev_token: (B,) previous token ids; defaults to state.token

        Returns:
            (logits, next state): logits are (B, |V|)
        """
        token = state.token if prev_token is None else prev_token
        if bool(((token < 0) | (token >= self.vocab_size)).any()):
            raise DecodeError(f"token id outside vocabulary of {self.vocab_size}")
        h1, c1 = self.lstm1(self.word_embed(token), (state.h1, state.c1))
        h2, c2 = self.lstm2(torch.cat([f_ora, h1], dim=1), (state.h2, state.c2))
        logits = self.output(h2)
        return logits, DecodeState(h1, c1, h2, c2, token)

    def forward(self, f_ora: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
        """
        Teacher-forced logits.

        Args:
            f_ora: (B, d_f)
            targets: (B, T) target ids, EOS-terminated and PAD-filled

        Returns:
            (B, T, |V|) logits; position t predicts targets[:, t]
        """
        state = self.init_state(f_ora)
        inputs = torch.cat([state.token.unsqueeze(1), targets[:, :-1]], dim=1)
        # PAD only ever follows EOS; feed it as a harmless token
        inputs = inputs.masked_fill(inputs == PAD_ID, EOS_ID)
        logits = []
        for t in range(targets.shape[1]):
            step_logits, state = self.step(f_ora, state, inputs[:, t])
            logits.append(step_logits)
        return torch.stack(logits, dim=1)

    # ---------------- inference ----------------

    def greedy_decode(self, f_ora: torch.Tensor, max_len: int = MAX_CAPTION_LENGTH):
        """
        Argmax decoding; ties go to the lowest token id.

        Returns:
            (tokens, logprobs): one id list per row (EOS excluded) and the
            summed log-probability per row (EOS included)
        """
        single = f_ora.dim() == 1
        if single:
            f_ora = f_ora.unsqueeze(0)
        batch = f_ora.shape[0]
        state = self.init_state(f_ora)
        tokens = [[] for _ in range(batch)]
        logprobs = f_ora.new_zeros(batch)
        done = torch.zeros(batch, dtype=torch.bool)
        with torch.no_grad():
            for _ in range(max_len):
                logits, state = self.step(f_ora, state)
                step_lp = F.log_softmax(logits, dim=1)
                chosen = torch.argmax(step_lp, dim=1)
                picked = step_lp.gather(1, chosen.unsqueeze(1)).squeeze(1)
                logprobs = logprobs + torch.where(done, torch.zeros_like(picked), picked)
                for row in range(batch):
                    if not done[row] and int(chosen[row]) != EOS_ID:
                        tokens[row].append(int(chosen[row]))
                done = done | (chosen == EOS_ID)
                state.token = chosen
                if bool(done.all()):
                    break
        if single:
            return tokens[0], float(logprobs[0])
        return tokens, logprobs

    def _beam_search(self, f_ora: torch.Tensor, width: int, max_len: int, length_normalize: bool):
        def rank(score, seq):
            return score / max(len(seq), 1) if length_normalize else score

        state = self.init_state(f_ora.unsqueeze(0))
        live = [(0.0, [])]
        finished = []
        for t in range(max_len):
            rows = f_ora.unsqueeze(0).expand(len(live), -1)
            logits, state = self.step(rows, state)
            step_lp = F.log_softmax(logits, dim=1)

            candidates = []
            for b, (score, seq) in enumerate(live):
                for v, lp in enumerate(step_lp[b].tolist()):
                    candidates.append((score + lp, lp, seq + [v], b))
            # total log-prob, then step log-prob, then token ids
            candidates.sort(key=lambda c: (-rank(c[0], c[2]), -c[1], c[2]))

            next_live, parents = [], []
            for score, _, seq, b in candidates[:width]:
                if seq[-1] == EOS_ID:
                    finished.append((score, seq[:-1]))
                elif t + 1 == max_len:
                    finished.append((score, seq))
                else:
                    next_live.append((score, seq))
                    parents.append(b)
            if not next_live:
                break
            state = state.select(torch.tensor(parents, dtype=torch.long))
            state.token = torch.tensor([seq[-1] for _, seq in next_live], dtype=torch.long)
            live = next_live

        finished.sort(key=lambda c: (-rank(c[0], c[1] + [EOS_ID]), c[1]))
        return finished[0]

    def beam_decode(self, f_ora: torch.Tensor, beam: int = 5, max_len: int = MAX_CAPTION_LENGTH,
                    length_normalize: bool = False) -> Tuple[List[int], float]:
        """
        Beam search for one f_ora vector.

        Unlike a single beam search, this runs a full search at every width
        from 1 to ``beam`` and keeps the best result, so one caption costs
        ``beam`` searches. In exchange the returned log-prob never drops
        below greedy and never decreases as the beam widens. Equal scores
        go to the narrower beam.

        Returns:
            (token ids without EOS, summed log-prob)
        """
        if beam < 1:
            raise DecodeError(f"beam must be >= 1, got {beam}")
        if f_ora.dim() != 1:
            raise DecodeError("beam_decode takes a single f_ora vector")

        best = None
        with torch.no_grad():
            for width in range(1, beam + 1):
                score, seq = self._beam_search(f_ora, width, max_len, length_normalize)
                key = score / (len(seq) + 1) if length_normalize else score
                if best is None or key > best[0]:
                    best = (key, score, seq)
        return best[2], best[1]

    def sample(self, f_ora: torch.Tensor, max_len: int = MAX_CAPTION_LENGTH,
               generator: Optional[torch.Generator] = None):
        """
        Draw one sentence per row from the model's distribution.

        Returns:
            (tokens, logprobs): (B, T) ids with EOS then PAD after the end,
            and the differentiable summed log-probability per row
        """
        batch = f_ora.shape[0]
        state = self.init_state(f_ora)
        done = torch.zeros(batch, dtype=torch.bool)
        tokens, logprobs = [], f_ora.new_zeros(batch)
        for _ in range(max_len):
            logits, state = self.step(f_ora, state)
            step_lp = F.log_softmax(logits, dim=1)
            chosen = torch.multinomial(step_lp.detach().exp(), 1, generator=generator).squeeze(1)
            picked = step_lp.gather(1, chosen.unsqueeze(1)).squeeze(1)
            logprobs = logprobs + picked.masked_fill(done, 0.0)
            tokens.append(chosen.masked_fill(done, PAD_ID))
            done = done | (chosen == EOS_ID)
            state.token = chosen.masked_fill(done, EOS_ID)
            if bool(done.all()):
                break
        return torch.stack(tokens, dim=1), logprobs
