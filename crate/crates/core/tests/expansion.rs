use expandforge::backends::{gen_toy_dataset, BackendConfig, Backends, LabeledDataset};
use expandforge::pipeline::{
    dataset_digest, expand_dataset, read_manifest, with_workers, write_dataset, write_manifest, ExpansionConfig,
    MethodId,
};

fn backends() -> Backends {
    Backends::toy_prior(4, 16, &BackendConfig::default()).unwrap()
}

fn reversed(data: &LabeledDataset) -> LabeledDataset {
    let idx: Vec<usize> = (0..data.len()).rev().collect();
    data.select(&idx).unwrap()
}

#[test]
fn per_seed_outputs_survive_shuffling() {
    let b = backends();
    let data = gen_toy_dataset(4, 3, 16, 40).unwrap();
    let shuffled = reversed(&data);
    let n = data.len();
    for method in MethodId::ALL {
        let config = ExpansionConfig::for_method(method).with_ratio(2);
        let (a, _) = expand_dataset(&data, method, &config, &b, 9).unwrap();
        let (s, _) = expand_dataset(&shuffled, method, &config, &b, 9).unwrap();
        for i in 0..n {
            let j = n - 1 - i;
            let ours = &a.images()[n + 2 * i..n + 2 * i + 2];
            let theirs = &s.images()[n + 2 * j..n + 2 * j + 2];
            assert_eq!(ours, theirs, "{method}: seed {i}");
        }
    }
}

#[test]
fn worker_count_does_not_change_bytes() {
    let b = backends();
    let data = gen_toy_dataset(4, 4, 16, 41).unwrap();
    for method in [MethodId::GifLatent, MethodId::SelectiveCutout, MethodId::Gridmask] {
        let config = ExpansionConfig::for_method(method);
        let run = |w| with_workers(w, || expand_dataset(&data, method, &config, &b, 3).unwrap()).unwrap();
        let (d1, m1) = run(1);
        let (d4, m4) = run(4);
        assert_eq!(dataset_digest(&d1), dataset_digest(&d4));
        assert_eq!(m1.to_canonical_json().unwrap(), m4.to_canonical_json().unwrap());
    }
}

#[test]
fn guided_manifests_hold_their_invariants() {
    let b = backends();
    let data = gen_toy_dataset(4, 5, 16, 42).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for method in [MethodId::GifEmbed, MethodId::GifLatent] {
        let config = ExpansionConfig::for_method(method);
        let (out, manifest) = expand_dataset(&data, method, &config, &b, 8).unwrap();
        assert_eq!(manifest.record_count, config.ratio_k() * data.len());
        for r in &manifest.records {
            assert!(r.consistent);
            assert!(r.retry_count <= config.guidance.retries + 1);
            assert_eq!(r.seed_class, r.variant_class);
        }
        let (din, dout, mpath) =
            (dir.path().join("in.gifx"), dir.path().join("out.gifx"), dir.path().join(format!("{method}.json")));
        write_dataset(&data, &din).unwrap();
        write_dataset(&out, &dout).unwrap();
        write_manifest(&manifest, &mpath).unwrap();
        let back = read_manifest(&mpath).unwrap();
        back.verify_files(&din, &dout).unwrap();
        assert_eq!(back.records.len(), manifest.records.len());
    }
}

#[test]
fn different_global_seeds_differ() {
    let b = backends();
    let data = gen_toy_dataset(4, 2, 16, 43).unwrap();
    let config = ExpansionConfig::for_method(MethodId::Randlite);
    let (a, _) = expand_dataset(&data, MethodId::Randlite, &config, &b, 1).unwrap();
    let (c, _) = expand_dataset(&data, MethodId::Randlite, &config, &b, 2).unwrap();
    assert_ne!(dataset_digest(&a), dataset_digest(&c));
}
