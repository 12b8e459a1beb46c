"""
文本规范化：NFC、去控制字符、合并空白；默认保留大小写
"""
import unicodedata


def normalize_text(text: str, lowercase: bool = False) -> str:
    text = unicodedata.normalize("NFC", text or "")
    chars = []
    for ch in text:
        if ch.isspace():
            chars.append(" ")
        elif unicodedata.category(ch).startswith("C"):
            continue
        else:
            chars.append(ch)
    text = " ".join("".join(chars).split())
    return text.lower() if lowercase else text
