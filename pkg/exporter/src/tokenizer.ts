/**
 * Byte-level tokenizer: UTF-8 bytes are the vocabulary (0..255), plus
 * PAD/CLS/EOS specials. Deterministic for any input text, no external
 * vocabulary files.
 */

export const BYTE_VOCAB = 256;
export const PAD = 256;
export const CLS = 257;
export const EOS = 258;
export const VOCAB_SIZE = 259;

export type Architecture = 'encoder' | 'decoder' | 'encoder_decoder';

export interface Encoded {
  ids: number[];
  truncated: boolean;
}

/**
 * Encode one text for the given architecture, truncating the byte stream
 * so the full sequence (with specials) fits in maxTokens.
 *
 * encoder: [CLS] bytes...      (CLS carries the pooled representation)
 * decoder: bytes... [EOS]      (EOS is the last token, attending over all)
 * encoder_decoder: bytes...    (mean pooling needs no marker token)
 */
export function encode(
  text: string,
  architecture: Architecture,
  maxTokens: number,
): Encoded {
  if (maxTokens < 2) {
    throw new Error('maxTokens must be at least 2');
  }
  const bytes = Array.from(Buffer.from(text, 'utf-8')) as number[];
  const specials = architecture === 'encoder_decoder' ? 0 : 1;
  const budget = maxTokens - specials;
  const truncated = bytes.length > budget;
  const body = truncated ? bytes.slice(0, budget) : bytes;
  let ids: number[];
  if (architecture === 'encoder') {
    ids = [CLS, ...body];
  } else if (architecture === 'decoder') {
    ids = [...body, EOS];
  } else {
    ids = body.length > 0 ? body : [EOS]; // empty text still embeds
  }
  return { ids, truncated };
}
