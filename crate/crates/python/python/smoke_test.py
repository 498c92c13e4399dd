"""Smoke test for the expertbench extension module.

Build with `cargo build --release -p expertbench-py --features extension-module`,
copy target/release/libexpertbench_py.so to expertbench.so somewhere on
PYTHONPATH, then run this script.
"""

import tempfile

import expertbench as eb


def main():
    ds = eb.Dataset.synthetic(num_topics=3, experts_per_topic=3, docs_per_expert=5, noise_candidates=6)
    print(ds)
    assert ds.num_candidates == 15
    assert len(ds.topics) == 3

    with tempfile.TemporaryDirectory() as tmp:
        ds.save(tmp)
        again = eb.Dataset.load(tmp)
        assert again.fingerprint() == ds.fingerprint()

    rep = eb.Representation(ds, kind="tfidf")
    topic, experts = next(iter(ds.topics.items()))
    sims = rep.similarities(topic)
    assert len(sims) == ds.num_documents
    assert all(0.0 <= s <= 1.0 for s in sims)

    for name in ("panoptic", "vote", "propagation"):
        ranker = eb.Ranker(ds, rep, ranker=name)
        top = [cid for cid, _ in ranker.rank(topic)[: len(experts)]]
        assert set(top) == set(experts), (name, top, experts)
        report = ranker.evaluate("topic", k=3)
        print(f"{ranker.label:>20}  AP {report['summary']['ap']['mean']:.3f}")

    doc = ds.document_ids[0]
    ranked = eb.Ranker(ds, rep, ranker="vote").rank(ds.text(doc), leave_out=doc)
    assert len(ranked) == ds.num_candidates

    assert f"{eb.average_precision([0.9, 0.1, 0.8], [0, 2]):.3f}" == "1.000"
    assert eb.roc_auc([0.9, 0.1, 0.8], [1]) == 0.0
    assert eb.first_relevant_rank([0.3, 0.2, 0.1], [2]) == 3
    assert eb.precision_at_k([0.3, 0.2, 0.1], [0], 2) == 0.5

    reports = [eb.Ranker(ds, rep, ranker=r).evaluate("topic") for r in ("panoptic", "vote")]
    print(eb.report_table(reports))

    try:
        eb.Ranker(ds, rep, ranker="propagation", eta=1.5)
    except ValueError as err:
        print("rejected:", err)
    else:
        raise AssertionError("eta=1.5 accepted")
    print("ok")


if __name__ == "__main__":
    main()
