use std::path::PathBuf;

use qdnn::data::{
    encode_idx, load_binary_mnist_dir, load_split, AngleScale, IdxRecords, LoadError, IMAGE_PIXELS,
    TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
use qdnn::QdnnError;

fn images(labels: &[u8]) -> (IdxRecords, IdxRecords) {
    let mut pixels = Vec::with_capacity(labels.len() * IMAGE_PIXELS);
    for (i, _) in labels.iter().enumerate() {
        pixels.extend((0..IMAGE_PIXELS).map(|p| ((p * 7 + i * 13) % 256) as u8));
    }
    (
        IdxRecords::Images { rows: 28, cols: 28, pixels },
        IdxRecords::Labels(labels.to_vec()),
    )
}

fn write_split(dir: &std::path::Path, img: &str, lab: &str, labels: &[u8]) {
    let (i, l) = images(labels);
    std::fs::write(dir.join(img), encode_idx(&i)).unwrap();
    std::fs::write(dir.join(lab), encode_idx(&l)).unwrap();
}

#[test]
fn synthetic_files_load_in_order() {
    let dir = tempfile::tempdir().unwrap();
    write_split(dir.path(), TRAIN_IMAGES, TRAIN_LABELS, &[1, 5, 0, 0, 9, 1]);
    write_split(dir.path(), TEST_IMAGES, TEST_LABELS, &[7, 0]);
    let (train, test) = load_binary_mnist_dir(dir.path(), AngleScale::DEFAULT).unwrap();
    assert_eq!(train.iter().map(|s| s.label).collect::<Vec<_>>(), vec![1, 0, 0, 1]);
    assert_eq!(test.len(), 1);
    let (again, _) = load_binary_mnist_dir(dir.path(), AngleScale::DEFAULT).unwrap();
    assert_eq!(train, again);
}

#[test]
fn all_sevens_give_an_empty_split() {
    let dir = tempfile::tempdir().unwrap();
    write_split(dir.path(), TEST_IMAGES, TEST_LABELS, &[7, 7, 7]);
    let s = load_split(&dir.path().join(TEST_IMAGES), &dir.path().join(TEST_LABELS), AngleScale::DEFAULT).unwrap();
    assert!(s.is_empty());
}

#[test]
fn load_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = load_binary_mnist_dir(dir.path(), AngleScale::DEFAULT).unwrap_err();
    assert!(matches!(missing, LoadError::Io { .. }));
    assert!(missing.to_string().contains(TRAIN_IMAGES));

    write_split(dir.path(), TRAIN_IMAGES, TRAIN_LABELS, &[0, 1]);
    let path = dir.path().join(TRAIN_IMAGES);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    match load_split(&path, &dir.path().join(TRAIN_LABELS), AngleScale::DEFAULT).unwrap_err() {
        LoadError::Format { source: QdnnError::Parse { .. }, .. } => {}
        other => panic!("unexpected {other}"),
    }

    write_split(dir.path(), TRAIN_IMAGES, TRAIN_LABELS, &[0, 1]);
    std::fs::write(dir.path().join(TRAIN_LABELS), encode_idx(&IdxRecords::Labels(vec![0]))).unwrap();
    assert!(matches!(
        load_split(&path, &dir.path().join(TRAIN_LABELS), AngleScale::DEFAULT),
        Err(LoadError::Pairing { .. })
    ));
}

fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("QDNN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join(TEST_LABELS).exists().then_some(dir)
}

#[test]
fn mnist_binary_subset_counts() {
    let Some(dir) = mnist_dir() else {
        eprintln!("MNIST files not found; set QDNN_DATA_DIR to check split counts");
        return;
    };
    let (train, test) = load_binary_mnist_dir(&dir, AngleScale::DEFAULT).unwrap();
    assert_eq!(test.len(), 2115);
    assert_eq!(test.iter().filter(|s| s.label == 0).count(), 980);
    assert_eq!(train.len(), 12665);
    assert_eq!(train.iter().filter(|s| s.label == 1).count(), 6742);
}
