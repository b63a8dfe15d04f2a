import pytest

from pumpstudy import synth


@pytest.fixture(scope="session")
def small_corpus():
    return synth.generate_corpus(synth.SynthConfig(n_events=12, seed=11))


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory, small_corpus):
    d = tmp_path_factory.mktemp("corpus")
    synth.write_corpus(small_corpus, d)
    return d


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep
