use neurosym::evalharness::DatasetRecord;
use neurosym::scoring::GroundTruth;

const CATEGORIES: [&str; 3] = ["math", "science", "general"];

/// `n` records with distinct prompts spread over three categories.
pub fn distinct_records(n: usize) -> Vec<DatasetRecord> {
    (0..n)
        .map(|i| {
            let truth = GroundTruth::option(["A", "B", "C", "D", "E"][i % 5]).unwrap();
            DatasetRecord::new(format!("r{i}"), CATEGORIES[i % 3], format!("Question number {i}: which option?"), truth)
        })
        .collect()
}

/// `total` records of which exactly `duplicates` repeat an earlier prompt up
/// to case and whitespace.
pub fn records_with_duplicates(total: usize, duplicates: usize) -> Vec<DatasetRecord> {
    let originals = total - duplicates;
    let mut records = distinct_records(originals);
    for k in 0..duplicates {
        let source = &records[(k * 7) % originals];
        let prompt = match k % 3 {
            0 => source.prompt.to_uppercase(),
            1 => format!("  {}\n", source.prompt.replace(' ', "   ")),
            _ => source.prompt.clone(),
        };
        let dup = DatasetRecord::new(format!("d{k}"), source.category.clone(), prompt, source.truth.clone());
        // Spread duplicates through the file rather than appending them.
        records.insert((k * 23 + 1) % (records.len() + 1), dup);
    }
    records
}
