//! Binary corpus cache: `LINCORP\0`, format version, then the normalized
//! records and every derived index in paper order.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::{Author, Corpus, IngestStats, PaperIdx, PaperRecord, PubType};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LINCORP\0";
pub const CORPUS_CACHE_VERSION: u32 = 1;

fn cache_err(e: std::io::Error) -> Error {
    Error::Cache(e.to_string())
}

impl Corpus {
    pub fn write_cache(&self, w: impl Write) -> Result<()> {
        self.write_cache_inner(w).map_err(cache_err)
    }

    fn write_cache_inner(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = Writer::new(w);
        w.bytes(MAGIC)?;
        w.u32(CORPUS_CACHE_VERSION)?;
        let s = &self.stats;
        for v in [
            s.papers,
            s.skipped_out_of_range,
            s.listed_refs,
            s.resolved_refs,
            s.dangling_refs,
            s.future_refs_dropped,
            s.self_refs_dropped,
            s.duplicate_refs_collapsed,
        ] {
            w.u64(v as u64)?;
        }
        w.u32(self.papers.len() as u32)?;
        for (i, p) in self.papers.iter().enumerate() {
            w.str(&p.id)?;
            w.i32(p.year)?;
            w.str(&p.field)?;
            match &p.venue {
                Some(v) => {
                    w.u8(1)?;
                    w.str(v)?;
                }
                None => w.u8(0)?,
            }
            w.u8(p.pub_type.code())?;
            w.u32(p.team_size.unwrap_or(0))?;
            w.u32(p.authors.len() as u32)?;
            for a in &p.authors {
                w.u32(a.initial as u32)?;
                w.str(&a.last_name)?;
            }
            w.u32(p.references.len() as u32)?;
            for r in &p.references {
                w.str(r)?;
            }
            let refs: Vec<u32> = self.refs[i].iter().map(|r| r.0).collect();
            w.u32s(&refs)?;
            w.u32(self.listed_ref_count[i])?;
            let citing: Vec<u32> = self.citing[i].iter().map(|r| r.0).collect();
            w.u32s(&citing)?;
            w.u8(self.eligible[i] as u8)?;
        }
        w.finish()?;
        Ok(())
    }

    pub fn read_cache(r: impl Read) -> Result<Corpus> {
        let mut r = Reader::new(r);
        let magic: [u8; 8] = r.bytes().map_err(cache_err)?;
        if &magic != MAGIC {
            return Err(Error::Cache("not a corpus cache (bad magic)".into()));
        }
        let version = r.u32().map_err(cache_err)?;
        if version != CORPUS_CACHE_VERSION {
            return Err(Error::Cache(format!(
                "corpus cache version {version}, expected {CORPUS_CACHE_VERSION}"
            )));
        }
        Self::read_body(&mut r).map_err(cache_err)?
    }

    fn read_body<R: Read>(r: &mut Reader<R>) -> std::io::Result<Result<Corpus>> {
        let mut stat = [0usize; 8];
        for s in stat.iter_mut() {
            *s = r.u64()? as usize;
        }
        let stats = IngestStats {
            papers: stat[0],
            skipped_out_of_range: stat[1],
            listed_refs: stat[2],
            resolved_refs: stat[3],
            dangling_refs: stat[4],
            future_refs_dropped: stat[5],
            self_refs_dropped: stat[6],
            duplicate_refs_collapsed: stat[7],
        };
        let n = r.u32()? as usize;
        let mut papers = Vec::with_capacity(n);
        let mut refs = Vec::with_capacity(n);
        let mut listed = Vec::with_capacity(n);
        let mut citing = Vec::with_capacity(n);
        let mut eligible = Vec::with_capacity(n);
        for _ in 0..n {
            let id = r.str()?;
            let year = r.i32()?;
            let field = r.str()?;
            let venue = match r.u8()? {
                0 => None,
                _ => Some(r.str()?),
            };
            let Some(pub_type) = PubType::from_code(r.u8()?) else {
                return Ok(Err(Error::Cache("bad publication type code".into())));
            };
            let team_size = Some(r.u32()?).filter(|&m| m > 0);
            let n_auth = r.u32()? as usize;
            let mut authors = Vec::with_capacity(n_auth.min(1024));
            for _ in 0..n_auth {
                let Some(initial) = char::from_u32(r.u32()?) else {
                    return Ok(Err(Error::Cache("bad author initial".into())));
                };
                authors.push(Author {
                    initial,
                    last_name: r.str()?,
                });
            }
            let n_refs = r.u32()? as usize;
            let mut references = Vec::with_capacity(n_refs.min(1 << 16));
            for _ in 0..n_refs {
                references.push(r.str()?);
            }
            papers.push(PaperRecord {
                id,
                year,
                field,
                venue,
                pub_type,
                authors,
                team_size,
                references,
            });
            refs.push(r.u32s()?.into_iter().map(PaperIdx).collect());
            listed.push(r.u32()?);
            citing.push(r.u32s()?.into_iter().map(PaperIdx).collect());
            eligible.push(r.u8()? != 0);
        }
        Ok(Corpus::from_parts(papers, refs, listed, citing, eligible, stats))
    }

    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_cache_inner(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Stable content hash of the normalized corpus (hex, 16 chars).
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_cache_bytes());
        hex::encode(&digest[..8])
    }
}
