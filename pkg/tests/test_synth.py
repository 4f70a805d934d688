import numpy as np
import pytest

from tabinhibit.fretboard import FretboardConfig
from tabinhibit.ingest import targets_of
from tabinhibit.synth import (SynthParams, default_vocabulary, generate_corpus, pitch_salience,
                              split_corpus, split_indices, unison_alternatives)


def small(**kw):
    return SynthParams(**dict(dict(seed=3, num_tracks=5, frames_per_track=60), **kw))


def test_same_seed_same_corpus():
    a, b = generate_corpus(small()), generate_corpus(small())
    for x, y in zip(a.features, b.features):
        assert np.array_equal(x, y)
    assert [t.frets.tolist() for t in a.tablatures] == [t.frets.tolist() for t in b.tablatures]


def test_different_seed_different_corpus():
    a, b = generate_corpus(small()), generate_corpus(small(seed=4))
    assert any(not np.array_equal(x.frets, y.frets) for x, y in zip(a.tablatures, b.tablatures))


def test_track_does_not_depend_on_corpus_size():
    a, b = generate_corpus(small(num_tracks=2)), generate_corpus(small())
    assert np.array_equal(a.features[1], b.features[1])


def test_noiseless_features_are_exact_salience():
    corpus = generate_corpus(small(pitch_noise=0.0))
    for tab, x in zip(corpus.tablatures, corpus.features):
        assert set(np.unique(x)) <= {0.0, 1.0}
        assert np.array_equal(x, pitch_salience(tab))
        assert x.shape == (44, 60)


def test_targets_are_one_hot_per_string():
    corpus = generate_corpus(small())
    for t in corpus.targets():
        assert t.shape == (126, 60)
        assert (t.reshape(6, 21, -1).sum(axis=1) == 1).all()


def test_default_corpus_shape():
    corpus = generate_corpus()
    assert len(corpus) == 60
    assert corpus.features[0].shape == (44, 200)


def test_empty_vocabulary_is_rejected():
    with pytest.raises(ValueError, match="empty"):
        generate_corpus(small(chord_vocabulary=[]))


@pytest.mark.parametrize("kw", [dict(unison_confusability=1.5), dict(pitch_noise=-0.1),
                                dict(num_tracks=0), dict(min_hold=5, max_hold=2)])
def test_bad_parameters(kw):
    with pytest.raises(ValueError):
        generate_corpus(small(**kw))


def test_unison_alternatives_keep_pitches():
    fb = FretboardConfig()
    for shape in default_vocabulary():
        pitches = sorted(fb.tuning[s - 1] + f for s, f in shape)
        for alt in unison_alternatives(shape, fb):
            assert sorted(fb.tuning[s - 1] + f for s, f in alt) == pitches
            assert len({s for s, _ in alt}) == len(alt)


def test_unison_relocation_gives_identical_features_for_different_tablature():
    corpus = generate_corpus(small(pitch_noise=0.0, unison_confusability=1.0, num_tracks=3))
    fb = corpus.fretboard
    shape = default_vocabulary()[0]
    alt = unison_alternatives(shape, fb)[0]
    from tabinhibit.ingest import FrameTablature

    def tab_of(voicing):
        frets = np.full((6, 1), -1)
        for s, f in voicing:
            frets[s - 1, 0] = f
        return FrameTablature(frets, fb)

    a, b = tab_of(shape), tab_of(alt)
    assert np.array_equal(pitch_salience(a), pitch_salience(b))
    assert not np.array_equal(targets_of(a), targets_of(b))


def test_confusability_zero_uses_only_templates():
    corpus = generate_corpus(small(unison_confusability=0.0))
    vocab = set(default_vocabulary())
    for tab in corpus.tablatures:
        for n in range(tab.num_frames):
            voicing = tuple((s + 1, int(f)) for s, f in enumerate(tab.frets[:, n]) if f >= 0)
            assert not voicing or voicing in vocab


def test_split_of_sixty():
    train, val, test = split_indices(60, seed=0)
    assert (len(train), len(val), len(test)) == (40, 10, 10)
    assert sorted(train + val + test) == list(range(60))
    assert split_indices(60, seed=0) == (train, val, test)
    assert split_indices(60, seed=1) != (train, val, test)


def test_split_rejects_empty_part():
    with pytest.raises(ValueError, match="empty"):
        split_indices(2)
    with pytest.raises(ValueError):
        split_indices(10, ratios=(0.5, 0.5, 0.0))


def test_split_corpus_returns_subcorpora():
    corpus = generate_corpus(small(num_tracks=6))
    train, val, test = split_corpus(corpus, seed=2)
    ids = [t.track_id for part in (train, val, test) for t in part.tracks]
    assert sorted(ids) == sorted(t.track_id for t in corpus.tracks)


def test_params_dict_round_trip():
    p = small(unison_confusability=0.25)
    assert SynthParams.from_dict(p.to_dict()) == p
