use std::path::Path;

use rpap_core::Error;

/// Reads a `task_id,usage` CSV and groups the samples by task, in order of
/// first appearance.
pub fn read_trace(path: &Path) -> Result<Vec<(String, Vec<f64>)>, Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema {
                path: format!("{}: header", path.display()),
                message: format!("missing column {name:?}"),
            })
    };
    let (task_col, usage_col) = (col("task_id")?, col("usage")?);

    let mut order: Vec<(String, Vec<f64>)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let task = rec.get(task_col).unwrap_or("").trim().to_owned();
        let raw = rec.get(usage_col).unwrap_or("").trim();
        let usage: f64 = raw.parse().map_err(|_| Error::Schema {
            path: format!("{}: line {line}, usage", path.display()),
            message: format!("not a number: {raw:?}"),
        })?;
        let slot = *index.entry(task.clone()).or_insert_with(|| {
            order.push((task, Vec::new()));
            order.len() - 1
        });
        order[slot].1.push(usage);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_by_first_appearance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "task_id,usage\nb,0.1\na,0\nb,0.3\n").unwrap();
        let tasks = read_trace(&path).unwrap();
        assert_eq!(
            tasks,
            vec![("b".into(), vec![0.1, 0.3]), ("a".into(), vec![0.0])]
        );
    }

    #[test]
    fn reports_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "task_id,usage\nb,x\n").unwrap();
        match read_trace(&path) {
            Err(Error::Schema { path, .. }) => assert!(path.ends_with("line 2, usage")),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "task,usage\n").unwrap();
        assert!(read_trace(&path).is_err());
    }
}
