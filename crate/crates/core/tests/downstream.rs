use std::collections::BTreeSet;

use proptest::prelude::*;
use simrel::downstream::{
    category_ranking, default_synonym_pairs, load_labels, load_synonym_pairs, ols_fixed_effects, ols_single, regress,
    task_a, task_b, task_c, DocTopicMatrix, LabelSet, RegressionTable, Split, TopicWordMatrix,
};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("d{i:03}")).collect()
}

fn labels(entries: &[(&str, &[&str])]) -> LabelSet {
    entries
        .iter()
        .map(|(d, ls)| (d.to_string(), ls.iter().map(|s| s.to_string()).collect()))
        .collect()
}

#[test]
fn four_doc_two_category_fixture() {
    use Split::*;
    let m = DocTopicMatrix::new(
        "c",
        "m",
        ids(4),
        vec![Train, Train, Test, Test],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.9, 0.2], vec![0.3, 0.7]],
    )
    .unwrap();
    let l = labels(&[("d000", &["grain"]), ("d001", &["oil"]), ("d002", &["oil"]), ("d003", &["oil", "ship"])]);
    // d002 ranks grain (cos .976) above oil (.217); d003 ranks oil first.
    let ranking = category_ranking(&m, &l).unwrap();
    assert_eq!(ranking["d002"], vec!["grain", "oil"]);
    assert_eq!(ranking["d003"], vec!["oil", "grain"]);
    let r = task_a(&m, &l).unwrap();
    // both categories fit in the top three, so every test doc hits;
    // recall: d002 1/1, d003 1/2 (ship has no training document)
    assert_eq!(r.hit3, 1.0);
    assert!((r.recall3 - 0.75).abs() < 1e-15);
    assert_eq!(r.excluded_categories, vec!["ship".to_string()]);
}

#[test]
fn test_doc_equal_to_single_train_doc_ranks_its_category_first() {
    let mut rows = Vec::new();
    let mut split = Vec::new();
    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    for c in 0..6 {
        for j in 0..3 {
            let v: Vec<f64> = (0..6).map(|t| if t == c { 1.0 } else { 0.05 * ((t + j) % 3) as f64 }).collect();
            rows.push(v);
            split.push(Split::Train);
            entries.push((format!("d{:03}", rows.len() - 1), vec![format!("cat{c}")]));
        }
    }
    let lone = vec![0.2, 0.3, 0.1, 0.9, 0.4, 0.6];
    rows.push(lone.clone());
    split.push(Split::Train);
    entries.push((format!("d{:03}", rows.len() - 1), vec!["lone".into()]));
    rows.push(lone);
    split.push(Split::Test);
    entries.push((format!("d{:03}", rows.len() - 1), vec!["lone".into()]));
    let n = rows.len();
    let m = DocTopicMatrix::new("c", "m", ids(n), split, rows).unwrap();
    let l: LabelSet = entries.into_iter().map(|(d, ls)| (d, ls.into_iter().collect())).collect();
    let ranking = category_ranking(&m, &l).unwrap();
    assert_eq!(ranking[&format!("d{:03}", n - 1)][0], "lone");
}

/// Independent Task A: centroids and rankings recomputed from scratch.
fn task_a_oracle(m: &DocTopicMatrix, l: &LabelSet) -> (f64, f64) {
    let cats: BTreeSet<&String> = (0..m.len()).filter(|&i| m.split[i] == Split::Train).flat_map(|i| &l[&m.doc_ids[i]]).collect();
    let centroid = |c: &String| -> Vec<f64> {
        let members: Vec<&Vec<f64>> = (0..m.len())
            .filter(|&i| m.split[i] == Split::Train && l[&m.doc_ids[i]].contains(c))
            .map(|i| &m.rows[i])
            .collect();
        (0..m.topics()).map(|t| members.iter().map(|r| r[t]).sum::<f64>() / members.len() as f64).collect()
    };
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 { 0.0 } else { d / (na * nb) }
    };
    let cents: Vec<(&String, Vec<f64>)> = cats.iter().map(|c| (*c, centroid(c))).collect();
    let (mut hit, mut rec, mut n) = (0.0, 0.0, 0.0);
    for i in (0..m.len()).filter(|&i| m.split[i] == Split::Test) {
        let mut r: Vec<(f64, &String)> = cents.iter().map(|(c, v)| (cos(&m.rows[i], v), *c)).collect();
        r.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        let truth = &l[&m.doc_ids[i]];
        let k = r.iter().take(3).filter(|(_, c)| truth.contains(*c)).count();
        hit += if k > 0 { 1.0 } else { 0.0 };
        rec += k as f64 / truth.len() as f64;
        n += 1.0;
    }
    (hit / n, rec / n)
}

fn random_corpus(seed: u64, n: usize, k: usize, cats: usize) -> (DocTopicMatrix, LabelSet) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut split = Vec::new();
    let mut l = LabelSet::new();
    for i in 0..n {
        let c = rng.random_range(0..cats);
        let row: Vec<f64> = (0..k).map(|t| rng.random::<f64>() * 0.4 + if t % cats == c { 1.0 } else { 0.0 }).collect();
        rows.push(row);
        split.push(if i % 3 == 0 { Split::Test } else { Split::Train });
        let mut set: BTreeSet<String> = [format!("c{c}")].into();
        if rng.random::<f64>() < 0.3 {
            set.insert(format!("c{}", rng.random_range(0..cats)));
        }
        l.insert(format!("d{i:03}"), set);
    }
    (DocTopicMatrix::new("c", "m", ids(n), split, rows).unwrap(), l)
}

#[test]
fn task_a_matches_oracle_on_random_corpora() {
    for seed in 0..5 {
        let (m, l) = random_corpus(seed, 60, 8, 6);
        let r = task_a(&m, &l).unwrap();
        let (hit, rec) = task_a_oracle(&m, &l);
        assert!((r.hit3 - hit).abs() < 1e-12 && (r.recall3 - rec).abs() < 1e-12);
    }
}

/// Brute-force SCR: full sort of all other documents for each query.
fn scr_oracle(m: &DocTopicMatrix, l: &LabelSet, k: usize) -> f64 {
    let n = m.len();
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let mut total = 0.0;
    for q in 0..n {
        let mut all: Vec<(f64, usize)> = (0..n).filter(|&j| j != q).map(|j| (cos(&m.rows[q], &m.rows[j]), j)).collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let ql = &l[&m.doc_ids[q]];
        total += all[..k].iter().filter(|(_, j)| l[&m.doc_ids[*j]].intersection(ql).next().is_some()).count() as f64 / k as f64;
    }
    total / n as f64
}

#[test]
fn task_b_trivial_and_brute_force() {
    let n = 12;
    let m = DocTopicMatrix::new("c", "m", ids(n), vec![Split::Train; n], vec![vec![0.3, 0.7]; n]).unwrap();
    let l: LabelSet = ids(n).into_iter().map(|d| (d, ["x".to_string()].into())).collect();
    assert_eq!(task_b(&m, &l, 10, 1).unwrap(), 1.0);

    let rows: Vec<Vec<f64>> = (0..22).map(|i| if i < 11 { vec![1.0, 0.01 * i as f64] } else { vec![0.01 * i as f64, 1.0] }).collect();
    let m = DocTopicMatrix::new("c", "m", ids(22), vec![Split::Train; 22], rows).unwrap();
    let l: LabelSet = ids(22).into_iter().enumerate().map(|(i, d)| (d, [format!("g{}", i / 11)].into())).collect();
    assert_eq!(task_b(&m, &l, 10, 1).unwrap(), 1.0);

    let (m, l) = random_corpus(7, 30, 5, 4);
    let got = task_b(&m, &l, 10, 3).unwrap();
    assert!((got - scr_oracle(&m, &l, 10)).abs() < 1e-12);
    assert_eq!(got, task_b(&m, &l, 10, 1).unwrap());
    assert!(task_b(&m, &l, 30, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn tasks_a_b_ignore_global_scaling(seed in 0u64..500, scale in 0.01f64..100.0) {
        let (m, l) = random_corpus(seed, 40, 6, 5);
        let mut scaled = m.clone();
        for r in scaled.rows.iter_mut() {
            for x in r.iter_mut() {
                *x *= scale;
            }
        }
        let (a, b) = (task_a(&m, &l).unwrap(), task_a(&scaled, &l).unwrap());
        prop_assert!((a.hit3 - b.hit3).abs() < 1e-12 && (a.recall3 - b.recall3).abs() < 1e-12);
        prop_assert!((task_b(&m, &l, 10, 1).unwrap() - task_b(&scaled, &l, 10, 1).unwrap()).abs() < 1e-12);
    }
}

fn tw(vocab: &[&str], rows: Vec<Vec<f64>>) -> TopicWordMatrix {
    TopicWordMatrix::new(vocab.iter().map(|s| s.to_string()).collect(), rows).unwrap()
}

fn pair(a: &str, b: &str) -> (String, String) {
    (a.into(), b.into())
}

#[test]
fn task_c_hand_cases() {
    // identical columns for rise and increase
    let t = tw(&["rise", "increase", "other"], vec![vec![0.4, 0.4, 0.2], vec![0.1, 0.1, 0.8]]);
    let dt_rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64 + 0.5, (i % 5) as f64 + 0.25]).collect();
    let dt = DocTopicMatrix::new("c", "m", ids(30), vec![Split::Train; 30], dt_rows).unwrap();
    let r = task_c(&t, &dt, &[pair("rise", "increase"), pair("rise", "absent")], 10).unwrap();
    assert_eq!(r.per_pair[0].2, 1.0);
    assert_eq!(r.skipped, vec![pair("rise", "absent")]);
    assert!(task_c(&t, &dt, &[pair("nope", "absent")], 10).is_err());

    // 20 topics, one per document; word a loads on documents 0-9, word b
    // on 10-19 (disjoint) and word c on 9-18 (one shared with a)
    let vocab = ["a", "b", "c", "filler"];
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|t| {
            let a = if t < 10 { 0.1 } else { 0.0 };
            let b = if t >= 10 { 0.1 } else { 0.0 };
            let c = if (9..19).contains(&t) { 0.1 } else { 0.0 };
            vec![a, b, c, 1.0 - a - b - c]
        })
        .collect();
    let t = tw(&vocab, rows);
    let dt_rows: Vec<Vec<f64>> = (0..20).map(|d| (0..20).map(|t| if t == d { 1.0 } else { 0.0 }).collect()).collect();
    let dt = DocTopicMatrix::new("c", "m", ids(20), vec![Split::Train; 20], dt_rows).unwrap();
    let r = task_c(&t, &dt, &[pair("a", "b"), pair("a", "c")], 10).unwrap();
    assert_eq!(r.per_pair[0].2, 0.0);
    assert!((r.per_pair[1].2 - 1.0 / 19.0).abs() < 1e-15);
    assert!((r.mean_jaccard - 1.0 / 38.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn task_c_ignores_document_names(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        use rand::seq::SliceRandom;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = 4;
        let vocab = ["w0", "w1", "w2", "w3", "w4", "w5"];
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let r: Vec<f64> = (0..vocab.len()).map(|_| rng.random::<f64>() + 0.01).collect();
                let s: f64 = r.iter().sum();
                r.iter().map(|x| x / s).collect()
            })
            .collect();
        let t = tw(&vocab, rows);
        let dt_rows: Vec<Vec<f64>> = (0..25).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect();
        let dt = DocTopicMatrix::new("c", "m", ids(25), vec![Split::Train; 25], dt_rows.clone()).unwrap();
        let mut renamed: Vec<String> = (0..25).map(|i| format!("doc-{}", rng.random::<u32>() ^ i)).collect();
        renamed.shuffle(&mut rng);
        let dt2 = DocTopicMatrix::new("c", "m", renamed, vec![Split::Train; 25], dt_rows).unwrap();
        let pairs = vec![pair("w0", "w1"), pair("w2", "w3"), pair("w4", "w5")];
        let a = task_c(&t, &dt, &pairs, 10).unwrap();
        let b = task_c(&t, &dt2, &pairs, 10).unwrap();
        prop_assert_eq!(a.mean_jaccard, b.mean_jaccard);
    }
}

#[test]
fn topic_word_rows_must_be_distributions() {
    assert!(TopicWordMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.5, 0.6]]).is_err());
    assert!(TopicWordMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.5, 0.5 + 1e-7]]).is_ok());
}

#[test]
fn dense_and_triplet_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("m.csv"), "t0,t1,t2\n0.5,0,0.5\n0,1,0\n0.2,0.3,0.5\n").unwrap();
    std::fs::write(
        d.join("m.json"),
        r#"{"corpus": "news", "model": "lda", "doc_ids": ["x", "y", "z"], "split": ["train", "train", "test"]}"#,
    )
    .unwrap();
    std::fs::write(d.join("m.trip"), "0,0,0.5\n0,2,0.5\n1,1,1\n2,0,0.2\n2,1,0.3\n2,2,0.5\n").unwrap();
    std::fs::write(
        d.join("t.json"),
        r#"{"corpus": "news", "model": "lda", "doc_ids": ["x", "y", "z"], "split": ["train", "train", "test"], "format": "triplet", "topics": 3}"#,
    )
    .unwrap();
    let a = DocTopicMatrix::load(&d.join("m.csv"), &d.join("m.json")).unwrap();
    let b = DocTopicMatrix::load(&d.join("m.trip"), &d.join("t.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.split[2], Split::Test);
    std::fs::write(d.join("bad.trip"), "0,5,0.5\n").unwrap();
    assert!(DocTopicMatrix::load(&d.join("bad.trip"), &d.join("t.json")).is_err());

    std::fs::write(d.join("labels.tsv"), "x\tgrain,oil\ny\toil\n").unwrap();
    let l = load_labels(&d.join("labels.tsv")).unwrap();
    assert_eq!(l["x"].len(), 2);
}

#[test]
fn synonym_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.tsv");
    std::fs::write(&p, "increase\trise\ndecline\tfall\ncompany\tfirm\n").unwrap();
    assert_eq!(load_synonym_pairs(&p).unwrap().len(), 3);
    std::fs::write(&p, "increase\trise\nRise\tincrease\n").unwrap();
    assert_eq!(load_synonym_pairs(&p).unwrap(), vec![pair("increase", "rise")]);
    std::fs::write(&p, "increase rise\n").unwrap();
    assert!(load_synonym_pairs(&p).is_err());
    let builtin = default_synonym_pairs();
    assert_eq!(builtin.len(), 50);
    assert_eq!(&builtin[..3], &[pair("increase", "rise"), pair("decline", "fall"), pair("company", "firm")]);
}

/// Solves the normal equations XᵀX b = Xᵀy by Gaussian elimination with
/// partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

#[test]
fn ols_matches_reference_values() {
    // reference values from scipy.stats.linregress
    let r = ols_single("x", &[1.0, 2.0, 3.0, 4.0, 5.0], &[2.1, 3.9, 6.2, 7.8, 10.1]).unwrap();
    assert!((r.slope - 1.99).abs() < 1e-10);
    assert!((r.intercepts[0] - 0.05).abs() < 1e-10);
    assert!((r.r2 - 0.997305328900977).abs() < 1e-10);
    assert!((r.p - 5.9415391117559265e-05).abs() < 1e-12);
    assert_eq!((r.n, r.df), (5, 3));

    // fixed effects: numpy least squares with group dummies
    let x = [0.1, 0.4, 0.35, 0.8, 0.2, 0.5, 0.9, 0.3, 0.6, 0.75];
    let y = [1.0, 1.9, 1.7, 3.1, 0.2, 1.1, 2.4, 2.0, 2.9, 3.3];
    let g: Vec<String> = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2].iter().map(|k| format!("g{k}")).collect();
    let r = ols_fixed_effects("x", &x, &y, &g).unwrap();
    assert!((r.slope - 3.0493614083534686).abs() < 1e-10);
    for (got, want) in r.intercepts.iter().zip([0.6671384190541944, -0.3929927511218503, 1.0561845587389254]) {
        assert!((got - want).abs() < 1e-10);
    }
    assert!((r.r2 - 0.9990295674467493).abs() < 1e-10);
    assert!((r.t - 62.07800225924074).abs() < 1e-8);
    assert!((r.p - 1.1746372281449768e-09).abs() < 1e-15);
    assert_eq!(r.df, 6);
}

proptest! {
    #[test]
    fn ols_agrees_with_normal_equations(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0usize..3), 8..40),
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1 + 0.7 * p.0).collect();
        let g: Vec<String> = pts.iter().map(|p| format!("g{}", p.2)).collect();

        let single = ols_single("x", &x, &y).unwrap();
        let b = normal_equations(&x.iter().map(|&v| vec![1.0, v]).collect::<Vec<_>>(), &y);
        prop_assert!((single.slope - b[1]).abs() < 1e-10 && (single.intercepts[0] - b[0]).abs() < 1e-10);
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        prop_assert!(cov == 0.0 || single.slope.signum() == cov.signum());

        let groups: BTreeSet<&String> = g.iter().collect();
        prop_assume!(groups.len() >= 2);
        let levels: Vec<&String> = groups.into_iter().collect();
        let design: Vec<Vec<f64>> = x
            .iter()
            .zip(&g)
            .map(|(&v, gi)| std::iter::once(v).chain(levels.iter().map(|l| (*l == gi) as u8 as f64)).collect())
            .collect();
        let b = normal_equations(&design, &y);
        let fe = ols_fixed_effects("x", &x, &y, &g).unwrap();
        prop_assert!((fe.slope - b[0]).abs() < 1e-10);
        for (got, want) in fe.intercepts.iter().zip(&b[1..]) {
            prop_assert!((got - want).abs() < 1e-10);
        }
    }
}

#[test]
fn regression_table_drops_missing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(
        &p,
        "model,corpus,relatedness,task_a\nlda,news,0.1,0.5\nnmf,news,0.2,0.7\netm,news,0.3,NA\nctm,news,0.4,1.1\nbert,news,,0.3\n",
    )
    .unwrap();
    let t = RegressionTable::load(&p).unwrap();
    let r = regress(&t, "relatedness", "task_a", None).unwrap();
    assert_eq!(r.n, 3);
    assert!((r.slope - 2.0).abs() < 1e-12);
    assert!(regress(&t, "missing", "task_a", None).is_err());
}
