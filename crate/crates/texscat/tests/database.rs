use std::fs;

use texscat::config::Layout;
use texscat::dataset::{index_dataset, Dataset};
use texscat::dbfile;
use texscat_core::{ExtractorConfig, FeatureDb, Method, Signature, SignatureConfig, SubbandParams};

fn weibull_config() -> SignatureConfig {
    SignatureConfig {
        method: Method::WstWeibull,
        scales: 1,
        rotations: 2,
        order: 1,
        normalized: false,
        epsilon_rel: 0.0,
    }
}

fn sig(class: &str, id: u32, params: [(f64, f64); 2]) -> Signature {
    let entries = params
        .iter()
        .enumerate()
        .map(|(r, &(l, k))| SubbandParams::new(format!("0:{r}"), l, k))
        .collect();
    Signature::new(weibull_config(), entries)
        .unwrap()
        .with_source(class, id)
}

/// Product form of the kernel, evaluated directly.
fn kernel(l1: f64, k1: f64, l2: f64, k2: f64) -> f64 {
    let k = 0.5 * (k1 + k2);
    let (a, b) = (l1.powf(k), l2.powf(k));
    4.0 * (a * b).sqrt() / (a + b) * (k1 * k2).sqrt() / (k1 + k2)
}

#[test]
fn toy_database_survives_the_file_and_ranks_by_hand() {
    let records = [
        sig("bark", 0, [(1.0, 2.0), (0.5, 1.0)]),
        sig("bark", 1, [(1.3, 2.2), (0.5, 1.2)]),
        sig("sand", 0, [(3.0, 1.5), (2.0, 1.0)]),
    ];
    let db = FeatureDb::from_records(records.to_vec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.db");
    dbfile::save(&db, &path).unwrap();
    let back = dbfile::load(&path).unwrap();
    assert_eq!(back, db);

    let q = sig("query", 0, [(1.1, 2.0), (0.6, 1.1)]);
    let expected: Vec<(String, f64)> = {
        let mut v: Vec<_> = records
            .iter()
            .map(|r| {
                let e = r.entries();
                let sm = -(kernel(1.1, 2.0, e[0].p1, e[0].p2).ln() + kernel(0.6, 1.1, e[1].p1, e[1].p2).ln());
                (format!("{}/{}", r.class_label(), r.patch_id()), sm)
            })
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    };
    let hits = back.query(&q, 5).unwrap();
    assert_eq!(hits.len(), 3);
    for (hit, (name, sm)) in hits.iter().zip(&expected) {
        assert_eq!(&format!("{}/{}", hit.class, hit.patch_id), name);
        assert!((hit.value.value() - sm).abs() < 1e-12);
    }
}

#[test]
fn foreign_fingerprint_is_rejected_on_query() {
    let db = FeatureDb::from_records(vec![sig("a", 0, [(1.0, 2.0), (1.0, 2.0)])]).unwrap();
    let other = SignatureConfig {
        normalized: true,
        method: Method::NwstWeibull,
        epsilon_rel: 1e-6,
        ..weibull_config()
    };
    let entries = vec![SubbandParams::new("0:0", 1.0, 2.0), SubbandParams::new("0:1", 1.0, 2.0)];
    let q = Signature::new(other, entries).unwrap();
    assert!(db.query(&q, 1).is_err());
}

#[test]
fn indexing_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    texscat::synth::write_dataset(&root, &texscat::synth::fine_coarse(&[0.2, 2.0], 2, 64, 4)).unwrap();
    let ds = Dataset::load(&root, 32, Layout::Tiles, false).unwrap();
    for method in Method::ALL {
        let cfg = ExtractorConfig {
            method,
            dwt_levels: 2,
            ..Default::default()
        };
        let paths: Vec<_> = [1, 3]
            .iter()
            .map(|&workers| {
                let db = index_dataset(&ds, cfg, workers, &|_, _| {}).unwrap();
                let p = dir.path().join(format!("{method}-{workers}.db"));
                dbfile::save(&db, &p).unwrap();
                p
            })
            .collect();
        let (a, b) = (fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
        assert_eq!(a, b, "{method}");
        let db = dbfile::load(&paths[0]).unwrap();
        assert_eq!(db.len(), 16);
        // canonical record order: class, then patch id
        let ids: Vec<_> = db
            .records()
            .iter()
            .map(|r| (r.class_label().to_owned(), r.patch_id()))
            .collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }
}

#[test]
fn progress_reaches_the_total() {
    use std::sync::atomic::{AtomicUsize, Ordering};
    let dir = tempfile::tempdir().unwrap();
    texscat::synth::write_dataset(dir.path(), &texscat::synth::separable(2, 1, 64, 2)).unwrap();
    let ds = Dataset::load(dir.path(), 32, Layout::Tiles, false).unwrap();
    let calls = AtomicUsize::new(0);
    let last = AtomicUsize::new(0);
    let cfg = ExtractorConfig {
        scales: 2,
        ..Default::default()
    };
    index_dataset(&ds, cfg, 2, &|done, total| {
        calls.fetch_add(1, Ordering::SeqCst);
        last.fetch_max(done, Ordering::SeqCst);
        assert_eq!(total, 8);
    })
    .unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 8);
    assert_eq!(last.load(Ordering::SeqCst), 8);
}
