use crate::error::{Error, Result};
use crate::image::{unpad_plane, Padding, Plane};

/// One similarity map per template.
///
/// Fresh from the solver the maps cover the padded input; [`crop_field`]
/// brings them back to original image coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityField {
    maps: Vec<Plane>,
    pad: Padding,
    cropped: bool,
}

impl SimilarityField {
    pub fn new(maps: Vec<Plane>, pad: Padding) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::EmptyInput("similarity field needs at least one map"));
        };
        if maps.iter().any(|m| m.dims() != first.dims()) {
            return Err(Error::DimensionMismatch("similarity maps differ in size".into()));
        }
        Ok(Self {
            maps,
            pad,
            cropped: false,
        })
    }

    pub(crate) fn with_maps(&self, maps: Vec<Plane>) -> Self {
        Self {
            maps,
            pad: self.pad,
            cropped: self.cropped,
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.maps[0].dims()
    }

    pub fn pad(&self) -> Padding {
        self.pad
    }

    pub fn is_cropped(&self) -> bool {
        self.cropped
    }

    pub fn map(&self, j: usize) -> &Plane {
        &self.maps[j]
    }

    pub fn maps(&self) -> &[Plane] {
        &self.maps
    }

    pub fn into_maps(self) -> Vec<Plane> {
        self.maps
    }
}

/// Removes the preprocessing pad from every map.
pub fn crop_field(field: &SimilarityField) -> Result<SimilarityField> {
    if field.cropped {
        return Err(Error::AlreadyCropped);
    }
    let maps = if field.pad.is_none() {
        field.maps.clone()
    } else {
        field
            .maps
            .iter()
            .map(|m| unpad_plane(m, field.pad))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SimilarityField {
        maps,
        pad: Padding::NONE,
        cropped: true,
    })
}
