mod common;

use std::collections::BTreeSet;

use common::{dis_of, naive_complete_linkage, random_pearson, random_sim};
use proptest::prelude::*;
use tdbht::dbht::{apsp, Assignment, GroupAssignment, GroupStage};
use tdbht::linkage::{build_hierarchy, complete_linkage_merges, Dendrogram, Level};
use tdbht::pipeline::{run, PipelineConfig};
use tdbht::tmfg::{build_tmfg, PrefixConfig};
use tdbht::Error;

fn one_group(n: usize) -> Assignment {
    Assignment {
        groups: GroupAssignment {
            group: vec![0; n],
            score: vec![0.0; n],
            stage: vec![GroupStage::Attachment; n],
            v0: vec![(0, (0..n).collect())],
        },
        bubble: vec![0; n],
        bubble_score: vec![0.0; n],
    }
}

#[test]
fn single_subgroup_is_plain_complete_linkage() {
    for case in 0..40u64 {
        let n = 4 + (case as usize * 3) % 61;
        let s = if case % 2 == 0 { random_sim(n, case) } else { random_pearson(n, case) };
        let g = build_tmfg(&s, PrefixConfig::new(2).unwrap()).unwrap();
        let a = apsp(&g, &dis_of(&s)).unwrap();
        let d = build_hierarchy(&one_group(n), &a);
        let expected = naive_complete_linkage(n, |u, v| a.get(u, v));
        let got: Vec<(usize, usize, f64)> = d.nodes()[n..]
            .iter()
            .map(|x| {
                let (l, r) = x.children.unwrap();
                (l, r, x.merge_distance)
            })
            .collect();
        assert_eq!(got, expected, "case {case}");
    }
}

#[test]
fn integer_distances_with_many_ties() {
    for case in 0..30u64 {
        let n = 3 + case as usize;
        let dist = |u: usize, v: usize| ((u * 7 + v * 7 + (u * v) % 5 + case as usize) % 4) as f64;
        let leaves: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let got: Vec<(usize, usize, f64)> =
            complete_linkage_merges(&leaves, dist).iter().map(|m| (m.a, m.b, m.distance)).collect();
        assert_eq!(got, naive_complete_linkage(n, dist), "case {case}");
    }
}

fn check_valid(d: &Dendrogram) {
    let n = d.n();
    assert_eq!(d.nodes().len(), 2 * n - 1);
    assert_eq!(d.leaves_under(d.root()), (0..n).collect::<Vec<_>>());
    d.check_monotone().unwrap();
    for (g, n_b) in d.group_sizes() {
        let mut heights: Vec<f64> = d.nodes()[n..]
            .iter()
            .filter(|x| x.group == Some(g) && matches!(x.level, Some(Level::Intra | Level::InterBubble)))
            .map(|x| x.height)
            .collect();
        assert_eq!(heights.len(), n_b - 1);
        heights.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..n_b - 1).map(|i| 1.0 / (n_b - 1 - i) as f64).collect();
        assert_eq!(heights, expected);
    }
}

#[test]
fn random_pipelines_are_valid() {
    let mut done = 0;
    for seed in 0..30u64 {
        let n = 5 + (seed as usize * 29) % 120;
        let s = random_pearson(n, 600 + seed);
        let out = match run(&s, &dis_of(&s), &PipelineConfig::new(1 + seed as usize % 7).unwrap()) {
            Ok(out) => out,
            Err(Error::Unassignable { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        check_valid(&out.dendrogram);
        for k in 1..=n {
            let labels = out.dendrogram.cut(k).unwrap();
            assert_eq!(labels.iter().collect::<BTreeSet<_>>().len(), k);
        }
        done += 1;
    }
    assert!(done >= 25);
}

#[test]
fn exports_cover_every_node() {
    let s = random_pearson(20, 9);
    let out = run(&s, &dis_of(&s), &PipelineConfig::new(3).unwrap()).unwrap();
    let d = &out.dendrogram;

    let mut buf = Vec::new();
    d.write_linkage(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 19);
    let last: Vec<&str> = text.lines().last().unwrap().split(' ').collect();
    assert_eq!(last[3], "20");

    let mut buf = Vec::new();
    d.write_newick(&mut buf).unwrap();
    let newick = String::from_utf8(buf).unwrap();
    assert!(newick.trim_end().ends_with(';'));
    assert_eq!(newick.matches('(').count(), 19);

    let mut buf = Vec::new();
    d.write_json(&mut buf).unwrap();
    let json = String::from_utf8(buf).unwrap();
    assert_eq!(json.matches("\"id\"").count(), 39);
}

#[test]
fn invalid_cuts() {
    let d = {
        let mut d = Dendrogram::leaves(3);
        let r = d.complete_linkage(&[0, 1, 2], |u, v| (u + v) as f64, Level::Intra, Some(0), Some(0));
        assert_eq!(r, 4);
        d
    };
    assert!(matches!(d.cut(0), Err(Error::InvalidCut { .. })));
    assert!(matches!(d.cut(4), Err(Error::InvalidCut { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cut_partitions(n in 4usize..60, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let s = random_sim(n, seed);
        if let Ok(out) = run(&s, &dis_of(&s), &PipelineConfig::new(2).unwrap()) {
            let k = 1 + ((n - 1) as f64 * frac) as usize;
            let labels = out.dendrogram.cut(k).unwrap();
            prop_assert_eq!(labels.len(), n);
            let parts: BTreeSet<usize> = labels.iter().copied().collect();
            prop_assert_eq!(parts, (0..k).collect::<BTreeSet<_>>());
            // labels numbered by smallest member
            let firsts: Vec<usize> = (0..k).map(|c| labels.iter().position(|&l| l == c).unwrap()).collect();
            prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

fn fabricated(group: Vec<usize>, bubble: Vec<usize>) -> Assignment {
    let n = group.len();
    Assignment {
        groups: GroupAssignment { group, score: vec![0.0; n], stage: vec![GroupStage::Attachment; n], v0: Vec::new() },
        bubble,
        bubble_score: vec![0.0; n],
    }
}

#[test]
fn singleton_groups_merge_only_at_top_level() {
    let n = 12;
    let s = random_pearson(n, 31);
    let a = apsp(&build_tmfg(&s, PrefixConfig::sequential()).unwrap(), &dis_of(&s)).unwrap();
    let mut d = build_hierarchy(&fabricated((0..n).collect(), (0..n).collect()), &a);
    d.assign_heights().unwrap();
    assert!(d.nodes()[n..].iter().all(|x| x.level == Some(Level::InterGroup)));
    assert_eq!(d.node(d.root()).height, n as f64);
}

#[test]
fn two_groups_meet_at_a_top_level_root() {
    let n = 10;
    let s = random_pearson(n, 32);
    let a = apsp(&build_tmfg(&s, PrefixConfig::sequential()).unwrap(), &dis_of(&s)).unwrap();
    let group: Vec<usize> = (0..n).map(|v| if v < 4 { 3 } else { 7 }).collect();
    let bubble: Vec<usize> = (0..n).map(|v| v % 3).collect();
    let mut d = build_hierarchy(&fabricated(group, bubble), &a);
    d.assign_heights().unwrap();
    let root = d.node(d.root());
    assert_eq!(root.level, Some(Level::InterGroup));
    assert_eq!(root.size, n);
    assert_eq!(root.height, 2.0);
    let (l, r) = root.children.unwrap();
    assert_eq!((d.node(l).height, d.node(r).height), (1.0, 1.0));
    assert_eq!(d.cut(2).unwrap(), (0..n).map(|v| usize::from(v >= 4)).collect::<Vec<_>>());
}

#[test]
fn worked_example_cut_in_two_splits_the_root() {
    let s = common::worked_example();
    let out = run(&s, &dis_of(&s), &PipelineConfig::new(2).unwrap()).unwrap();
    let d = &out.dendrogram;
    assert_eq!(d.node(d.root()).height, 1.0);
    let (l, r) = d.node(d.root()).children.unwrap();
    let mut sides = [d.leaves_under(l), d.leaves_under(r)];
    sides.sort();
    let labels = d.cut(2).unwrap();
    for (c, side) in sides.iter().enumerate() {
        assert!(side.iter().all(|&v| labels[v] == c));
    }
    assert_eq!(labels.iter().filter(|&&c| c == 0).count(), sides[0].len());
}
