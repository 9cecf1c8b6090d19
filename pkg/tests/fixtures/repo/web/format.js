// Formatting helpers for the demo web layer.

function padLeft(text, width) {
  let out = String(text);
  while (out.length < width) {
    out = " " + out;
  }
  return out;
}

function formatSize(bytes) {
  if (bytes < 1024) {
    return bytes + " B";
  } else {
    const kb = bytes / 1024;
    return kb.toFixed(1) + " KB";
  }
}

function truncate(text, limit) {
  if (text.length <= limit) {
    return text;
  }
  return text.slice(0, limit - 3) + "...";
}

function wordCount(text) {
  let count = 0;
  let inWord = false;
  for (const ch of text) {
    if (ch === " " || ch === "\n") {
      inWord = false;
    } else if (!inWord) {
      inWord = true;
      count = count + 1;
    }
  }
  return count;
}

module.exports = { padLeft, formatSize, truncate, wordCount };
