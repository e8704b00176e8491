use ndarray::Array2;
use proptest::prelude::*;
use timesplit_core::data::{CompoundRecord, DatasetBundle, FeatureTable, LabelTable, MonthDate};
use timesplit_core::split::{random_split, stratified_kfold, time_split};

fn bundle(dates: &[MonthDate]) -> DatasetBundle {
    let ids: Vec<String> = (0..dates.len()).map(|i| format!("c{i:04}")).collect();
    let n = ids.len();
    DatasetBundle {
        records: ids
            .iter()
            .zip(dates)
            .map(|(id, &d)| CompoundRecord {
                id: id.clone(),
                canonical_name: id.clone(),
                smiles: None,
                market_date: Some(d),
            })
            .collect(),
        tables: vec![FeatureTable::new("d", ids.clone(), vec!["f".into()], Array2::zeros((n, 1))).unwrap()],
        labels: LabelTable::new(ids.clone(), vec![], Array2::from_elem((n, 0), None)).unwrap(),
        compound_ids: ids,
    }
}

#[test]
fn four_hundred_fifty_one_compounds() {
    let threshold = MonthDate::new(1998, 10).unwrap();
    let dates: Vec<MonthDate> = (0..451)
        .map(|i| {
            let offset = if i < 361 { -1 - (i % 300) } else { i % 120 };
            MonthDate::from_ordinal(threshold.ordinal() + offset).unwrap()
        })
        .collect();
    let b = bundle(&dates);
    let plan = time_split(&b, threshold).unwrap();
    assert_eq!((plan.train_ids.len(), plan.test_ids.len()), (361, 90));

    let labels: Vec<Option<bool>> = (0..451).map(|i| Some(i % 5 == 0)).collect();
    let r = random_split(&b, 361, 90, 17, Some((19, &labels))).unwrap();
    let positives = r
        .test_ids
        .iter()
        .filter(|id| labels[id[1..].parse::<usize>().unwrap()] == Some(true))
        .count();
    assert_eq!(positives, 19);
}

proptest! {
    #[test]
    fn time_split_partitions_by_date(offsets in proptest::collection::vec(-50i32..50, 3..60), cut in -10i32..10) {
        let base = MonthDate::new(2000, 1).unwrap().ordinal();
        let dates: Vec<MonthDate> = offsets.iter().map(|o| MonthDate::from_ordinal(base + o).unwrap()).collect();
        let b = bundle(&dates);
        let threshold = MonthDate::from_ordinal(base + cut).unwrap();
        if let Ok(plan) = time_split(&b, threshold) {
            prop_assert_eq!(plan.train_ids.len() + plan.test_ids.len(), dates.len());
            for id in &plan.train_ids {
                let i: usize = id[1..].parse().unwrap();
                prop_assert!(dates[i] < threshold);
            }
            for id in &plan.test_ids {
                let i: usize = id[1..].parse().unwrap();
                prop_assert!(dates[i] >= threshold);
            }
        }
    }

    #[test]
    fn kfold_is_balanced(labels in proptest::collection::vec(any::<bool>(), 10..120), k in 2usize..8, seed in any::<u64>()) {
        let ids: Vec<String> = (0..labels.len()).map(|i| i.to_string()).collect();
        if let Ok(plan) = stratified_kfold(&ids, &labels, k, seed) {
            let sizes: Vec<usize> = (0..k).map(|f| plan.fold(f).len()).collect();
            let pos: Vec<usize> = (0..k).map(|f| plan.fold(f).iter().filter(|&&i| labels[i]).count()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(pos.iter().max().unwrap() - pos.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), labels.len());
        }
    }
}
