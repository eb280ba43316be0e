use pulldown_cmark::{html, Options, Parser};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theme {
    #[default]
    GfmLight,
}

impl Theme {
    fn css(self) -> &'static str {
        match self {
            Theme::GfmLight => GFM_LIGHT_CSS,
        }
    }
}

const GFM_LIGHT_CSS: &str = r#"body{margin:0;background:#ffffff;}
.markdown-body{box-sizing:border-box;max-width:980px;margin:0 auto;padding:45px;color:#1f2328;background:#ffffff;font-family:-apple-system,BlinkMacSystemFont,"Segoe UI","Noto Sans",Helvetica,Arial,sans-serif;font-size:16px;line-height:1.5;word-wrap:break-word;}
.markdown-body h1,.markdown-body h2,.markdown-body h3,.markdown-body h4,.markdown-body h5,.markdown-body h6{margin-top:24px;margin-bottom:16px;font-weight:600;line-height:1.25;}
.markdown-body h1{font-size:2em;padding-bottom:.3em;border-bottom:1px solid #d1d9e0;}
.markdown-body h2{font-size:1.5em;padding-bottom:.3em;border-bottom:1px solid #d1d9e0;}
.markdown-body h3{font-size:1.25em;}
.markdown-body h4{font-size:1em;}
.markdown-body h5{font-size:.875em;}
.markdown-body h6{font-size:.85em;color:#59636e;}
.markdown-body p,.markdown-body blockquote,.markdown-body ul,.markdown-body ol,.markdown-body table,.markdown-body pre{margin-top:0;margin-bottom:16px;}
.markdown-body a{color:#0969da;text-decoration:none;}
.markdown-body blockquote{margin-left:0;padding:0 1em;color:#59636e;border-left:.25em solid #d1d9e0;}
.markdown-body ul,.markdown-body ol{padding-left:2em;}
.markdown-body code{padding:.2em .4em;margin:0;font-size:85%;white-space:break-spaces;background-color:#818b981f;border-radius:6px;font-family:ui-monospace,SFMono-Regular,"SF Mono",Menlo,Consolas,monospace;}
.markdown-body pre{padding:16px;overflow:auto;font-size:85%;line-height:1.45;background-color:#f6f8fa;border-radius:6px;}
.markdown-body pre code{padding:0;background:transparent;white-space:pre;font-size:100%;}
.markdown-body table{border-spacing:0;border-collapse:collapse;display:block;width:max-content;max-width:100%;overflow:auto;}
.markdown-body table th,.markdown-body table td{padding:6px 13px;border:1px solid #d1d9e0;}
.markdown-body table th{font-weight:600;}
.markdown-body table tr:nth-child(2n){background-color:#f6f8fa;}
.markdown-body img{max-width:100%;box-sizing:content-box;}
.markdown-body hr{height:.25em;padding:0;margin:24px 0;background-color:#d1d9e0;border:0;}
.markdown-body del{color:#59636e;}
"#;

/// Render markdown to a standalone HTML document. Image `src` values are
/// kept as written, so relative paths resolve against the HTML file's
/// directory. Output depends only on `md` and `theme`.
pub fn markdown_to_html(md: &str, theme: Theme) -> String {
    let options = Options::ENABLE_TABLES | Options::ENABLE_STRIKETHROUGH | Options::ENABLE_TASKLISTS;
    let mut body = String::with_capacity(md.len() * 3 / 2);
    html::push_html(&mut body, Parser::new_ext(md, options));
    let css = theme.css();
    let mut out = String::with_capacity(body.len() + css.len() + 256);
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str("<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n<style>\n");
    out.push_str(css);
    out.push_str("</style>\n</head>\n<body>\n<article class=\"markdown-body\">\n");
    out.push_str(&body);
    out.push_str("</article>\n</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(html: &str) -> &str {
        let open = "<article class=\"markdown-body\">\n";
        let start = html.find(open).unwrap() + open.len();
        let end = html.rfind("</article>").unwrap();
        &html[start..end]
    }

    #[test]
    fn heading() {
        let h = markdown_to_html("# T", Theme::GfmLight);
        assert_eq!(body(&h), "<h1>T</h1>\n");
    }

    #[test]
    fn empty_document_has_empty_body() {
        let h = markdown_to_html("", Theme::GfmLight);
        assert!(h.starts_with("<!DOCTYPE html>"));
        assert_eq!(body(&h), "");
        assert!(h.ends_with("</html>\n"));
    }

    #[test]
    fn block_features() {
        let md = "**b** *i*\n\n```rust\nfn x() {}\n```\n\n<img src='content_image/1-0.png'>\n\n| a | b |\n|---|---|\n| 1 | 2 |\n\n~~s~~";
        let b = markdown_to_html(md, Theme::GfmLight);
        let b = body(&b);
        assert!(b.contains("<strong>b</strong> <em>i</em>"));
        assert!(b.contains("<pre><code class=\"language-rust\">fn x() {}\n</code></pre>"));
        assert!(b.contains("<img src='content_image/1-0.png'>"));
        assert!(b.contains("<table>"));
        assert!(b.contains("<del>s</del>"));
    }

    #[test]
    fn deterministic() {
        let md = "a\n\n![x](p.png)";
        assert_eq!(markdown_to_html(md, Theme::GfmLight), markdown_to_html(md, Theme::GfmLight));
    }
}
