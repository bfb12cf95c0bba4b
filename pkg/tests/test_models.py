import itertools
import math

import pytest
import torch
from torch.func import functional_call

from corpus.vocabulary import BOS_ID, EOS_ID, PAD_ID
from errors import DecodeError, GraphError, SymbolLookupError
from models.captioner import Captioner, targets_tensor
from models.decoder import DecodeState, SentenceDecoder, attend
from models.encoder import GraphEncoder, batch_graphs
from scenegraph.graph import SceneGraph


@pytest.fixture
def encoder(graph_vocab):
    torch.manual_seed(0)
    return GraphEncoder(graph_vocab, d_e=6, d_x=5)


def _embed(encoder, table, symbol):
    lexicon = {"object": encoder.vocab.objects, "attribute": encoder.vocab.attributes,
               "relation": encoder.vocab.relations}[table]
    return getattr(encoder, f"{table}_embed").weight[lexicon.id_of(symbol)]


# ---------------- encoder ----------------

def test_encoder_single_relation_by_hand(encoder):
    graph = SceneGraph(["man", "horse"], {1: ["black"]}, [(0, "riding", 1)])
    features = encoder.encode(graph)
    man, horse = _embed(encoder, "object", "man"), _embed(encoder, "object", "horse")
    triplet = torch.cat([man, horse, _embed(encoder, "relation", "riding")])

    assert torch.allclose(features.objects[0], encoder.g_s(triplet))
    assert torch.allclose(features.objects[1], encoder.g_o(triplet))
    assert torch.allclose(features.relations[0], encoder.g_r(triplet))
    none_pair = torch.cat([man, _embed(encoder, "attribute", "<none>")])
    assert torch.allclose(features.attributes[0], encoder.g_a(none_pair))
    black_pair = torch.cat([horse, _embed(encoder, "attribute", "black")])
    assert torch.allclose(features.attributes[1], encoder.g_a(black_pair))


def test_encoder_averages_over_triplets_and_attributes(encoder):
    graph = SceneGraph(["man", "horse", "field"], {0: ["young", "big"]},
                       [(0, "riding", 1), (0, "in", 2)])
    features = encoder.encode(graph)
    man = _embed(encoder, "object", "man")
    t1 = torch.cat([man, _embed(encoder, "object", "horse"), _embed(encoder, "relation", "riding")])
    t2 = torch.cat([man, _embed(encoder, "object", "field"), _embed(encoder, "relation", "in")])
    assert torch.allclose(features.objects[0], (encoder.g_s(t1) + encoder.g_s(t2)) / 2)

    a1 = torch.cat([man, _embed(encoder, "attribute", "young")])
    a2 = torch.cat([man, _embed(encoder, "attribute", "big")])
    assert torch.allclose(features.attributes[0], (encoder.g_a(a1) + encoder.g_a(a2)) / 2)


def test_isolated_object_gets_self_loop(encoder):
    features = encoder.encode(SceneGraph(["dog"]))
    dog = _embed(encoder, "object", "dog")
    loop = torch.cat([dog, dog, _embed(encoder, "relation", "<self>")])
    assert features.counts == (1, 1, 1)
    assert torch.allclose(features.objects[0], (encoder.g_s(loop) + encoder.g_o(loop)) / 2)
    assert torch.allclose(features.relations[0], encoder.g_r(loop))


def test_batch_matches_single_graphs(encoder, rider_graph):
    other = SceneGraph(["dog", "car"], {0: ["red"]}, [(0, "near", 1)])
    batched = encoder.encode_many([rider_graph, other])
    assert batched.counts == (5, 3, 5)
    assert torch.allclose(batched.objects[:3], encoder.encode(rider_graph).objects)
    assert torch.allclose(batched.relations[2:], encoder.encode(other).relations)
    assert torch.allclose(batched.attributes[3:], encoder.encode(other).attributes)
    padded, mask = batched.padded("relations")
    assert padded.shape == (2, 2, 5)
    assert mask.tolist() == [[True, True], [True, False]]


def test_batch_graphs_rejects_bad_input(graph_vocab):
    with pytest.raises(GraphError):
        batch_graphs([], graph_vocab)
    with pytest.raises(GraphError):
        batch_graphs([SceneGraph(["dog"], {}, [(0, "near", 4)])], graph_vocab)
    with pytest.raises(SymbolLookupError):
        batch_graphs([SceneGraph(["giraffe"])], graph_vocab)
    batch = batch_graphs([SceneGraph(["giraffe"], {0: ["tall"]})], graph_vocab, unknown="reserved")
    assert batch.object_ids.tolist() == [0]
    assert batch.attr_ids.tolist() == [0]


def test_encoder_gradcheck(graph_vocab, rider_graph, float64):
    torch.manual_seed(0)
    encoder = GraphEncoder(graph_vocab, d_e=3, d_x=2)
    batch = encoder.batch([rider_graph])

    for name, param in encoder.named_parameters():
        def run(w):
            features = functional_call(encoder, {name: w}, (batch,))
            return (features.objects ** 2).sum() + features.relations.sum() + (features.attributes ** 2).sum()

        weight = param.detach().clone().requires_grad_(True)
        assert torch.autograd.gradcheck(run, (weight,), eps=1e-6, atol=1e-5, rtol=1e-3), name


# ---------------- attention ----------------

def test_attend_avg_is_mean():
    features = torch.arange(6.0).reshape(3, 2)
    pooled, alpha = attend(features)
    assert torch.allclose(pooled, features.mean(dim=0))
    assert torch.allclose(alpha, torch.full((3,), 1 / 3))


def test_attend_softmax_weights():
    features = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
    pooled, alpha = attend(features, torch.tensor([math.log(3.0), 0.0]))
    assert torch.allclose(alpha, torch.tensor([0.75, 0.25]))
    assert torch.allclose(pooled, torch.tensor([0.75, 0.25]))


def test_attend_mask_ignores_padding():
    features = torch.tensor([[[1.0, 2.0], [3.0, 4.0]], [[5.0, 6.0], [99.0, 99.0]]])
    mask = torch.tensor([[True, True], [True, False]])
    pooled, _ = attend(features, torch.tensor([0.3, -0.2]), mask)
    assert torch.allclose(pooled[1], torch.tensor([5.0, 6.0]))


def test_attend_empty_set():
    with pytest.raises(DecodeError):
        attend(torch.zeros(0, 4))


def test_attention_weights_sum_to_one_and_ignore_score_shifts(float64):
    generator = torch.Generator().manual_seed(3)
    for _ in range(20):
        features = torch.randn(2, 5, 4, generator=generator) * 4
        weight = torch.randn(4, generator=generator)
        mask = torch.tensor([[True] * 5, [True, True, False, True, False]])
        pooled, alpha = attend(features, weight, mask)
        assert torch.allclose(alpha.sum(dim=1), torch.ones(2))
        assert float(alpha[1, 2]) == 0.0 and float(alpha[1, 4]) == 0.0

        # a constant column shifts every score by the same amount
        shift = float(torch.randn(1, generator=generator)) * 10
        shifted = torch.cat([features, torch.ones(2, 5, 1)], dim=2)
        pooled_s, alpha_s = attend(shifted, torch.cat([weight, torch.tensor([shift])]), mask)
        assert torch.allclose(alpha_s, alpha)
        assert torch.allclose(pooled_s[:, :4], pooled)


def test_attend_gradcheck(float64):
    generator = torch.Generator().manual_seed(4)
    features = torch.randn(2, 3, 4, generator=generator, requires_grad=True)
    weight = torch.randn(4, generator=generator, requires_grad=True)
    mask = torch.tensor([[True, True, True], [True, False, True]])
    assert torch.autograd.gradcheck(lambda f, w: attend(f, w, mask)[0], (features, weight))


# ---------------- decoder ----------------

@pytest.fixture
def decoder():
    torch.manual_seed(1)
    return SentenceDecoder(vocab_size=9, d_x=4, d_f=4, d_e=5, d_h=6, variant="att")


def test_decoder_dimension_checks(decoder):
    with pytest.raises(DecodeError):
        SentenceDecoder(9, d_x=4, d_f=5)
    with pytest.raises(DecodeError):
        SentenceDecoder(9, variant="lstm")
    with pytest.raises(DecodeError):
        decoder.fuse(torch.zeros(1, 4), torch.zeros(1, 3), torch.zeros(1, 4))


def test_uniform_step_distribution(decoder):
    torch.nn.init.zeros_(decoder.output.weight)
    f_ora = torch.randn(4)
    tokens, logprob = decoder.greedy_decode(f_ora, max_len=5)
    assert tokens == [PAD_ID] * 5
    assert logprob == pytest.approx(-5 * math.log(9), rel=1e-5)


def test_teacher_forcing_matches_steps(decoder):
    f_ora = torch.randn(2, 4)
    targets = torch.tensor([[4, 5, EOS_ID], [6, EOS_ID, PAD_ID]])
    logits = decoder(f_ora, targets)
    assert logits.shape == (2, 3, 9)

    state = decoder.init_state(f_ora)
    step_logits, state = decoder.step(f_ora, state)
    assert torch.allclose(logits[:, 0], step_logits)
    step_logits, _ = decoder.step(f_ora, state, torch.tensor([4, 6]))
    assert torch.allclose(logits[:, 1], step_logits)


def test_step_rejects_out_of_vocabulary_token(decoder):
    state = decoder.init_state(torch.zeros(1, 4))
    with pytest.raises(DecodeError):
        decoder.step(torch.zeros(1, 4), state, torch.tensor([42]))


def test_fuse_and_step_gradcheck(float64):
    torch.manual_seed(2)
    decoder = SentenceDecoder(vocab_size=7, d_x=3, d_f=3, d_e=4, d_h=5)
    f_o, f_r, f_a = (torch.randn(2, 3, requires_grad=True) for _ in range(3))
    assert torch.autograd.gradcheck(decoder.fuse, (f_o, f_r, f_a))

    f_ora = torch.randn(2, 3, requires_grad=True)
    h = torch.randn(2, 5, requires_grad=True)
    tokens = torch.tensor([4, 6])

    def run(f, h1):
        c = torch.zeros(2, 5)
        state = DecodeState(h1, c, h1 * 0.5, c, tokens)
        logits, after = decoder.step(f, state)
        return logits, after.h2

    assert torch.autograd.gradcheck(run, (f_ora, h))


def test_beam_one_is_greedy():
    for seed in range(100):
        torch.manual_seed(seed)
        decoder = SentenceDecoder(vocab_size=7, d_x=3, d_f=3, d_e=4, d_h=5)
        f_ora = torch.randn(3) * 3
        tokens, logprob = decoder.greedy_decode(f_ora, max_len=5)
        beam_tokens, beam_logprob = decoder.beam_decode(f_ora, beam=1, max_len=5)
        assert beam_tokens == tokens, seed
        assert beam_logprob == pytest.approx(logprob, abs=1e-5)


class _TableDecoder(SentenceDecoder):
    """Next-token log-probabilities looked up from the previous token alone."""

    def __init__(self, table):
        super().__init__(vocab_size=table.shape[0], d_x=2, d_f=2, d_e=2, d_h=2)
        self.table = table

    def step(self, f_ora, state, prev_token=None):
        token = state.token if prev_token is None else prev_token
        return self.table[token], DecodeState(state.h1, state.c1, state.h2, state.c2, token)


def test_beam_beats_greedy_on_hand_built_model():
    a, b = 4, 5
    probs = torch.full((6, 6), 1e-6)
    probs[BOS_ID, [a, b, EOS_ID]] = torch.tensor([0.5, 0.4, 0.1])
    probs[a, [a, b, EOS_ID]] = torch.tensor([0.34, 0.33, 0.33])
    probs[b, [a, b, EOS_ID]] = torch.tensor([0.025, 0.025, 0.95])
    probs[[PAD_ID, EOS_ID, 3]] = 1.0
    table = torch.log(probs)
    decoder = _TableDecoder(table)
    lp = torch.log_softmax(table, dim=1)

    # every caption of at most two steps: EOS-terminated or cut at max_len
    best_score, best_seq = -math.inf, None
    for length in (0, 1, 2):
        for seq in itertools.product([t for t in range(6) if t != EOS_ID], repeat=length):
            path = [BOS_ID, *seq]
            score = sum(float(lp[p, t]) for p, t in zip(path, path[1:]))
            if length < 2:
                score += float(lp[path[-1], EOS_ID])
            if score > best_score:
                best_score, best_seq = score, list(seq)

    greedy_tokens, greedy_lp = decoder.greedy_decode(torch.zeros(2), max_len=2)
    beam_tokens, beam_lp = decoder.beam_decode(torch.zeros(2), beam=2, max_len=2)
    assert greedy_tokens == [a, a]
    assert best_seq == [b]
    assert beam_tokens == best_seq
    assert beam_lp == pytest.approx(best_score, abs=1e-5)
    assert greedy_lp < beam_lp


def test_beam_never_worse_than_greedy_and_monotone(decoder):
    torch.manual_seed(6)
    for _ in range(5):
        f_ora = torch.randn(4) * 3
        _, greedy = decoder.greedy_decode(f_ora, max_len=6)
        scores = [decoder.beam_decode(f_ora, beam=k, max_len=6)[1] for k in (1, 2, 3, 5)]
        assert scores[0] >= greedy - 1e-5
        assert all(b >= a - 1e-9 for a, b in zip(scores, scores[1:]))


def test_beam_width_must_be_positive(decoder):
    with pytest.raises(DecodeError):
        decoder.beam_decode(torch.zeros(4), beam=0)


def test_sample_pads_after_eos(decoder):
    generator = torch.Generator().manual_seed(0)
    tokens, logprobs = decoder.sample(torch.randn(8, 4), max_len=6, generator=generator)
    assert tokens.shape[0] == 8 and tokens.shape[1] <= 6
    assert logprobs.requires_grad
    for row in tokens.tolist():
        if EOS_ID in row:
            assert all(t == PAD_ID for t in row[row.index(EOS_ID) + 1:])


# ---------------- captioner ----------------

def test_shared_attention_equals_tied_per_kind_attention(encoder, rider_graph):
    torch.manual_seed(7)
    shared = SentenceDecoder(vocab_size=9, d_x=5, d_f=5, d_e=4, d_h=6, variant="att-shared")
    per_kind = SentenceDecoder(vocab_size=9, d_x=5, d_f=5, d_e=4, d_h=6, variant="att")
    state = {k: v for k, v in shared.state_dict().items() if k != "w"}
    state.update(w_o=shared.w.detach(), w_r=shared.w.detach(), w_a=shared.w.detach())
    per_kind.load_state_dict(state)

    other = SceneGraph(["dog", "car", "street"], {0: ["red"]}, [(0, "near", 1), (1, "on", 2)])
    with torch.no_grad():
        features = encoder.encode_many([rider_graph, other])
        pooled = shared.pool(features)
        for expected, actual in zip(pooled, per_kind.pool(features)):
            assert torch.allclose(expected, actual)
        f_ora = shared.fuse(*pooled)
    assert shared.greedy_decode(f_ora, max_len=6)[0] == per_kind.greedy_decode(per_kind.fuse(*pooled), max_len=6)[0]


def test_targets_tensor(word_vocab):
    targets = targets_tensor([["a", "dog"], ["man"]], word_vocab, max_len=8)
    assert targets.tolist() == [[4, 7, EOS_ID], [6, EOS_ID, PAD_ID]]


def test_caption_batch_matches_single(graph_vocab, word_vocab, tiny_config, rider_graph):
    torch.manual_seed(0)
    model = Captioner(graph_vocab, word_vocab, tiny_config)
    other = SceneGraph(["dog", "car"], {0: ["red"]}, [(0, "near", 1)])
    batched = model.caption([rider_graph, other])
    assert batched == [model.caption([rider_graph])[0], model.caption([other])[0]]
    assert all(len(c) <= tiny_config.max_len for c in batched)
    beamed = model.caption([rider_graph], beam=3)
    assert len(beamed) == 1
