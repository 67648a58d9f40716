//! Hand-checked report pairs with known alignments and labels.

use radfault::splice::Label;
use radfault::taxonomy::ErrorClass;

use super::Pair;

use ErrorClass::*;
use Label::*;

pub struct LabeledPair {
    pub original: &'static str,
    pub error: &'static str,
    /// (label, class, error index) per mapping entry.
    pub expected: Vec<(Label, ErrorClass, Option<usize>)>,
}

pub fn labeled_pair() -> LabeledPair {
    LabeledPair {
        original: "Findings: Comparison is made to previous study from ___. \
            There is a right-sided PICC line with distal lead tip at the cavoatrial junction. \
            There has been removal of the right-sided chest tube. \
            There remains a curvilinear tubular device projecting over the mediastinum. \
            This has been seen on multiple images. \
            There is persistent opacity at the left mid lung field and left-sided pleural effusion which is stable. \
            There is no pulmonary edema. \
            The right lung is relatively clear.",
        error: "Findings: Comparison is made to previous study from ___. \
            There is a right-sided PICC line with distal lead tip at the mid SVC. \
            There has been removal of the right-sided chest tube. \
            There remains a curvilinear tubular device projecting over the mediastinum. \
            This has been seen on muitiple images. \
            There is persistent opacity at the left mid lung field and left-sided pleural effusion which stable. \
            There is no pulmonary edema. \
            The right lung is relatively clear. \
            The patient has had placement of an endotracheal tube.",
        expected: vec![
            (Neutral, NotApplicable, Some(0)),
            (Error, ChangePositionOfDevice, Some(1)),
            (Correct, NotApplicable, Some(2)),
            (Correct, NotApplicable, Some(3)),
            (Error, AddTypo, Some(4)),
            (Error, AddTypo, Some(5)),
            (Correct, NotApplicable, Some(6)),
            (Correct, NotApplicable, Some(7)),
            (Error, AddMedicalDevice, Some(8)),
        ],
    }
}

pub fn alignments() -> Vec<(&'static str, &'static str, Vec<Pair>)> {
    vec![
        (
            "Impression: As compared to ___, the lung volumes have slightly decreased.  \
             Signs of mild overinflation and moderate pleural effusions persist.  Moderate cardiomegaly.  \
             Elongation of the descending aorta.  No pneumonia.",
            "Impression: As compared to ___, the lung volumes have significantly increased. \
             Signs of severe overinflation and minor pleural effusions persist. Mild cardiomegaly. \
             Elongation of the ascending aorta. No pneumonia.",
            (0..5).map(|i| (Some(i), Some(i))).collect(),
        ),
        (
            "Findings: NG tube is coiled in the stomach.  Right PICC in lower SVC is unchanged in position.  \
             Cardiac size is normal.  Mild bibasilar opacities consistent with atelectasis, unchanged compared \
             to chest radiograph performed earlier in the same day.  There is no pneumothorax or pleural effusion. \
             Impression: NG tube in expected position with tip coiled in the stomach.  No other interval change \
             since chest radiograph performed earlier on the same day.",
            "Findings: NG tube is coiled in the upper part of the duodenum. Right PICC in proximal SVC is unchanged \
             in position. Mild bibasilar opacities consistent with atelectasis, unchanged compared to chest \
             radiograph performed earlier in the same day. There is no pneumothorax or pleural effusion. \
             Impression: NG tube in unexpected position with tip coiled in duodenum. Large bilateral pleural \
             effusions are noted.",
            vec![
                (Some(0), Some(0)),
                (Some(1), Some(1)),
                (Some(2), None),
                (Some(3), Some(2)),
                (Some(4), Some(3)),
                (Some(5), Some(4)),
                (None, Some(5)),
                (Some(6), None),
            ],
        ),
    ]
}

const DICT_ORIGINAL: [&str; 9] = [
    "Findings: The lung volumes are low.",
    "The cardiac, mediastinal and hilar contours appear unchanged, allowing for differences in technique.",
    "There are a number of round nodular densities projecting over each upper lung, but more numerous and discretely visualized in the left upper lobe, similar to prior study.",
    "However, in addition, there is a more hazy widespread opacity projecting over the left mid upper lung which could be compatible with a coinciding pneumonia.",
    "Pulmonary nodules in the left upper lobe are also not completely characterized on this study.",
    "There is no pleural effusion or pneumothorax.",
    "Post-operative changes are similar along the right chest wall.",
    "Impression: Increasing left lung opacification which may reflect pneumonia superimposed on metastatic disease, although other etiologies such as lymphangitic pattern of metastatic spread could be considered.",
    "CT may be helpful to evaluate further if needed clinically.",
];

const DICT_ERROR: [&str; 9] = [
    "Findings: The lung volumse are low.",
    "The cardiac, mediastinal and hilar contours appear unchanged, allowing for differences in technique.",
    "There are a number of round nodular densities projecting over each lower lung, but more numerous and discretely visualized in the right lower lobe, similar to prior study.",
    "However, in addition, there is a more hazy widespread opacity projecting over the left mid upper lung which could be compatible with a coinciding pneumonia.",
    "Pulmonary nodules in the right lower lobe are also not completely characterized on this study.",
    "There is no pleural effusion or pneumothorax.",
    "Post-operative changes are similar along the left chest wall.",
    "Impression: Increasing right lung opacification which may reflect pneumonia superimposed on metastatic disease, although other etiologies such as lymphangitic pattern of metastatic spread could be considered.",
    "CT may be helpful to evaluate further if needed clinically.",
];

/// Labels as printed with the dictionary example.
pub const LABEL_DICTIONARY_PRINTED: [u8; 9] = [1, 0, 1, 0, 1, 0, 0, 0, 0];

/// Sentence lists and the rule-consistent (label, class) per row.
pub fn label_dictionary() -> (Vec<&'static str>, Vec<&'static str>, Vec<(Label, ErrorClass)>) {
    (
        DICT_ORIGINAL.to_vec(),
        DICT_ERROR.to_vec(),
        vec![
            (Error, AddTypo),
            // "unchanged" refers to a prior study.
            (Neutral, NotApplicable),
            // Changed, but a comparison with a prior study.
            (Neutral, ChangeLocation),
            (Correct, NotApplicable),
            (Error, ChangeLocation),
            (Correct, NotApplicable),
            (Error, ChangeLocation),
            (Error, ChangeLocation),
            (Correct, NotApplicable),
        ],
    )
}
