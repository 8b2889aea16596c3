//! Canonical refactoring-type catalogue.
//!
//! 103 types detectable by RefactoringMiner 3.x, each with a short code and
//! a Fowler-style group. Names are matched byte-exactly against tool output.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RefactoringGroup {
    ComposingMethods,
    MovingFeatures,
    ManageModifiers,
    OrganizingData,
    SimplifyingMethodCalls,
    Generalization,
    ObjectReplacement,
    PackageManagement,
    TestSpecific,
    Others,
}

impl RefactoringGroup {
    pub const ALL: [RefactoringGroup; 10] = [
        Self::ComposingMethods,
        Self::MovingFeatures,
        Self::ManageModifiers,
        Self::OrganizingData,
        Self::SimplifyingMethodCalls,
        Self::Generalization,
        Self::ObjectReplacement,
        Self::PackageManagement,
        Self::TestSpecific,
        Self::Others,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::ComposingMethods => "Composing Methods",
            Self::MovingFeatures => "Moving Features between Objects",
            Self::ManageModifiers => "Manage Objects Modifiers",
            Self::OrganizingData => "Organizing Data",
            Self::SimplifyingMethodCalls => "Simplifying Method Calls",
            Self::Generalization => "Dealing with Generalization",
            Self::ObjectReplacement => "Object Replacement",
            Self::PackageManagement => "Package Management",
            Self::TestSpecific => "Test Specific",
            Self::Others => "Others",
        }
    }
}

/// One entry of the catalogue.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct TypeInfo {
    pub name: &'static str,
    pub abbreviation: &'static str,
    pub group: RefactoringGroup,
    /// Part of the 12-type set with known developer-reported motivations.
    pub in_reference_study: bool,
}

use RefactoringGroup as G;

macro_rules! catalogue {
    ($( $name:literal, $abbr:literal, $group:ident, $bold:literal; )*) => {
        const CATALOGUE: &[TypeInfo] = &[
            $( TypeInfo { name: $name, abbreviation: $abbr, group: G::$group, in_reference_study: $bold }, )*
        ];
    };
}

catalogue! {
    // Composing methods
    "Extract Method", "EM", ComposingMethods, true;
    "Inline Method", "IM", ComposingMethods, true;
    "Merge Method", "MerM", ComposingMethods, false;
    "Split Method", "SM", ComposingMethods, false;
    "Extract Variable", "EV", ComposingMethods, false;
    "Inline Variable", "IV", ComposingMethods, false;
    "Split Variable", "SV", ComposingMethods, false;
    "Merge Variable", "MV", ComposingMethods, false;
    "Rename Variable", "RV", ComposingMethods, false;
    "Change Variable Type", "CVT", ComposingMethods, false;
    "Move Code", "MCode", ComposingMethods, false;
    "Merge Catch", "MCat", ComposingMethods, false;
    "Merge Conditional", "MCon", ComposingMethods, false;
    "Split Conditional", "SC", ComposingMethods, false;
    // Moving features between objects
    "Extract Class", "EC", MovingFeatures, false;
    "Move Class", "MovC", MovingFeatures, true;
    "Rename Class", "RC", MovingFeatures, false;
    "Move Method", "MM", MovingFeatures, true;
    "Move Attribute", "MA", MovingFeatures, true;
    "Localize Parameter", "LP", MovingFeatures, false;
    "Replace Attribute With Variable", "RAWV", MovingFeatures, false;
    // Modifiers
    "Change Attribute Access Modifier", "CAAM", ManageModifiers, false;
    "Change Class Access Modifier", "CCAM", ManageModifiers, false;
    "Change Type Declaration Kind", "CTDK", ManageModifiers, false;
    "Add Method Modifier", "AMM", ManageModifiers, false;
    "Add Attribute Modifier", "AAM", ManageModifiers, false;
    "Add Variable Modifier", "AVM", ManageModifiers, false;
    "Add Parameter Modifier", "APM", ManageModifiers, false;
    "Add Class Modifier", "ACM", ManageModifiers, false;
    "Remove Method Modifier", "RMM", ManageModifiers, false;
    "Remove Attribute Modifier", "RAM", ManageModifiers, false;
    "Remove Variable Modifier", "RVM", ManageModifiers, false;
    "Remove Parameter Modifier", "RPM", ManageModifiers, false;
    "Remove Class Modifier", "RCM", ManageModifiers, false;
    // Organizing data
    "Extract Attribute", "ExA", OrganizingData, false;
    "Split Attribute", "SA", OrganizingData, false;
    "Merge Attribute", "MerA", OrganizingData, false;
    "Replace Attribute", "RepA", OrganizingData, false;
    "Rename Attribute", "RA", OrganizingData, false;
    "Inline Attribute", "IA", OrganizingData, false;
    "Encapsulate Attribute", "EnA", OrganizingData, false;
    "Parameterize Attribute", "PA", OrganizingData, false;
    "Change Attribute Type", "CAT", OrganizingData, false;
    "Replace Variable With Attribute", "RVWA", OrganizingData, false;
    // Simplifying method calls
    "Split Parameter", "SP", SimplifyingMethodCalls, false;
    "Merge Parameter", "MParam", SimplifyingMethodCalls, false;
    "Add Parameter", "AP", SimplifyingMethodCalls, false;
    "Remove Parameter", "RemP", SimplifyingMethodCalls, false;
    "Reorder Parameter", "RParam", SimplifyingMethodCalls, false;
    "Rename Parameter", "RenP", SimplifyingMethodCalls, false;
    "Parameterize Variable", "PV", SimplifyingMethodCalls, false;
    "Change Parameter Type", "CPT", SimplifyingMethodCalls, false;
    "Change Method Access Modifier", "CMAM", SimplifyingMethodCalls, false;
    "Change Return Type", "CRT", SimplifyingMethodCalls, false;
    "Rename Method", "RM", SimplifyingMethodCalls, false;
    // Generalization
    "Extract Superclass", "ESup", Generalization, true;
    "Extract Subclass", "ESub", Generalization, false;
    "Extract Interface", "EI", Generalization, true;
    "Pull Up Attribute", "PUA", Generalization, true;
    "Push Down Attribute", "PDA", Generalization, true;
    "Pull Up Method", "PUM", Generalization, true;
    "Push Down Method", "PDM", Generalization, true;
    "Split Class", "SClass", Generalization, false;
    "Merge Class", "MerC", Generalization, false;
    // Object replacement
    "Replace Loop With Pipeline", "RLWP", ObjectReplacement, false;
    "Replace Anonymous With Lambda", "RAWL", ObjectReplacement, false;
    "Replace Pipeline With Loop", "RPWL", ObjectReplacement, false;
    "Replace Anonymous With Class", "RAWC", ObjectReplacement, false;
    "Replace Generic With Diamond", "RGWD", ObjectReplacement, false;
    "Replace Conditional With Ternary", "RCWT", ObjectReplacement, false;
    // Packages
    "Rename Package", "RPack", PackageManagement, true;
    "Move Package", "MP", PackageManagement, false;
    "Split Package", "SPack", PackageManagement, false;
    "Merge Package", "MPack", PackageManagement, false;
    // Tests
    "Parameterize Test", "PT", TestSpecific, false;
    "Assert Throws", "AT", TestSpecific, false;
    // Composite and annotation-level operations
    "Move And Rename Attribute", "MARA", Others, false;
    "Move And Inline Method", "MAIM", Others, false;
    "Move And Rename Class", "MARC", Others, false;
    "Move And Rename Method", "MARM", Others, false;
    "Extract And Move Method", "EAMM", Others, false;
    "Add Class Annotation", "ACA", Others, false;
    "Add Attribute Annotation", "AAA", Others, false;
    "Add Method Annotation", "AMA", Others, false;
    "Add Parameter Annotation", "APA", Others, false;
    "Add Variable Annotation", "AVA", Others, false;
    "Modify Class Annotation", "MCA", Others, false;
    "Modify Attribute Annotation", "MAA", Others, false;
    "Modify Method Annotation", "MMA", Others, false;
    "Modify Parameter Annotation", "MPA", Others, false;
    "Modify Variable Annotation", "MVA", Others, false;
    "Remove Class Annotation", "RCA", Others, false;
    "Remove Attribute Annotation", "RAA", Others, false;
    "Remove Method Annotation", "RMA", Others, false;
    "Remove Parameter Annotation", "RPA", Others, false;
    "Remove Variable Annotation", "RVA", Others, false;
    "Add Thrown Exception Type", "ATET", Others, false;
    "Change Thrown Exception Type", "CTET", Others, false;
    "Remove Thrown Exception Type", "RTET", Others, false;
    "Move Source Folder", "MSF", Others, false;
    "Try With Resources", "TWR", Others, false;
    "Invert Condition", "IC", Others, false;
    "Collapse Hierarchy", "CH", Others, false;
}

/// Handle to a canonical catalogue entry. Cheap to copy; serializes as the
/// canonical name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RefactoringType(u8);

struct Index {
    by_name: HashMap<&'static str, u8>,
    by_abbr: HashMap<&'static str, u8>,
}

fn index() -> &'static Index {
    static INDEX: OnceLock<Index> = OnceLock::new();
    INDEX.get_or_init(|| Index {
        by_name: CATALOGUE.iter().enumerate().map(|(i, t)| (t.name, i as u8)).collect(),
        by_abbr: CATALOGUE
            .iter()
            .enumerate()
            .map(|(i, t)| (t.abbreviation, i as u8))
            .collect(),
    })
}

impl RefactoringType {
    pub const COUNT: usize = 103;

    /// Strict lookup by canonical name.
    pub fn from_name(name: &str) -> Option<Self> {
        index().by_name.get(name).map(|&i| Self(i))
    }

    pub fn from_abbreviation(abbr: &str) -> Option<Self> {
        index().by_abbr.get(abbr).map(|&i| Self(i))
    }

    pub fn all() -> impl ExactSizeIterator<Item = RefactoringType> + Clone {
        (0..CATALOGUE.len() as u8).map(Self)
    }

    pub fn info(self) -> &'static TypeInfo {
        &CATALOGUE[self.0 as usize]
    }

    pub fn name(self) -> &'static str {
        self.info().name
    }

    pub fn abbreviation(self) -> &'static str {
        self.info().abbreviation
    }

    pub fn group(self) -> RefactoringGroup {
        self.info().group
    }

    pub fn in_reference_study(self) -> bool {
        self.info().in_reference_study
    }

    /// Position in the catalogue; stable across runs.
    pub fn ordinal(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for RefactoringType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RefactoringType({})", self.name())
    }
}

impl fmt::Display for RefactoringType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for RefactoringType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RefactoringType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        RefactoringType::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown refactoring type {name:?}")))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn catalogue_has_103_unique_entries() {
        assert_eq!(CATALOGUE.len(), RefactoringType::COUNT);
        let names: HashSet<_> = CATALOGUE.iter().map(|t| t.name).collect();
        let abbrs: HashSet<_> = CATALOGUE.iter().map(|t| t.abbreviation).collect();
        assert_eq!(names.len(), 103);
        assert_eq!(abbrs.len(), 103);
    }

    #[test]
    fn twelve_reference_types() {
        let mut bold: Vec<_> = RefactoringType::all()
            .filter(|t| t.in_reference_study())
            .map(|t| t.abbreviation())
            .collect();
        bold.sort_unstable();
        assert_eq!(
            bold,
            ["EI", "EM", "ESup", "IM", "MA", "MM", "MovC", "PDA", "PDM", "PUA", "PUM", "RPack"]
        );
    }

    #[test]
    fn every_group_is_populated() {
        for g in RefactoringGroup::ALL {
            assert!(RefactoringType::all().any(|t| t.group() == g), "{g:?} empty");
        }
        let n_others = RefactoringType::all().filter(|t| t.group() == G::Others).count();
        assert_eq!(n_others, 27);
    }

    #[test]
    fn lookup_is_strict() {
        assert_eq!(RefactoringType::from_name("Extract Method").unwrap().abbreviation(), "EM");
        assert!(RefactoringType::from_name("Extracted Method").is_none());
        assert!(RefactoringType::from_name("extract method").is_none());
        assert_eq!(RefactoringType::from_abbreviation("MARC").unwrap().name(), "Move And Rename Class");
    }

    #[test]
    fn serde_uses_canonical_name() {
        let t = RefactoringType::from_name("Pull Up Method").unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "\"Pull Up Method\"");
        let back: RefactoringType = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<RefactoringType>("\"Pull Up\"").is_err());
    }
}
