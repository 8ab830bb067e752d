from pathlib import Path
from typing import List, Optional, Union

from reportlab import rl_config
from reportlab.lib import colors
from reportlab.lib.pagesizes import A4, letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import PageBreak, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from config import PDF_CONFIG
from filtration import CheckReport
from utils import summary_frame

# identical reports for identical inputs
rl_config.invariant = 1

PAGE_SIZES = {'A4': A4, 'letter': letter}


def _styles():
    """Title, heading and body styles from PDF_CONFIG."""
    styles = getSampleStyleSheet()
    title_style = ParagraphStyle(
        'CheckTitle',
        parent=styles['Heading1'],
        fontSize=PDF_CONFIG['font_size']['title'],
        fontName='Helvetica-Bold',
        textColor=colors.HexColor(PDF_CONFIG['colors']['title']),
        alignment=1,  # Center alignment
        spaceAfter=20,
    )
    heading_style = ParagraphStyle(
        'CheckHeading',
        parent=styles['Heading2'],
        fontSize=PDF_CONFIG['font_size']['heading'],
        fontName='Helvetica-Bold',
        textColor=colors.HexColor(PDF_CONFIG['colors']['pass']),
        spaceAfter=10,
    )
    body_style = ParagraphStyle(
        'CheckBody',
        parent=styles['Normal'],
        fontSize=PDF_CONFIG['font_size']['body'],
    )
    return title_style, heading_style, body_style


def _check_table(rows: List[List[str]], statuses: List[str]) -> Table:
    table = Table(rows, repeatRows=1)
    style = [
        ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor(PDF_CONFIG['colors']['header_bg'])),
        ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        ('FONTSIZE', (0, 0), (-1, -1), PDF_CONFIG['font_size']['body']),
        ('ALIGN', (2, 1), (3, -1), 'RIGHT'),
        ('GRID', (0, 0), (-1, -1), 0.5, colors.grey),
        ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
    ]
    for n, status in enumerate(statuses, start=1):
        color = PDF_CONFIG['colors']['pass'] if status == 'PASS' else PDF_CONFIG['colors']['fail']
        style.append(('TEXTCOLOR', (1, n), (1, n), colors.HexColor(color)))
    table.setStyle(TableStyle(style))
    return table


def generate_check_report(reports: List[CheckReport], path: Union[str, Path],
                          title: str = "Term-Structure Property Checks",
                          subtitle: Optional[str] = None) -> Path:
    """
    Render check records as a PDF table document.

    Parameters:
        reports: Check records in suite order.
        path: Output file.
        title: Document title.
        subtitle: Optional line under the title, e.g. the configuration path.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    doc = SimpleDocTemplate(
        str(path),
        pagesize=PAGE_SIZES.get(PDF_CONFIG['page_size'], A4),
        rightMargin=PDF_CONFIG['margin'],
        leftMargin=PDF_CONFIG['margin'],
        topMargin=PDF_CONFIG['margin'],
        bottomMargin=PDF_CONFIG['margin'],
        title=title,
    )
    title_style, heading_style, body_style = _styles()
    frame = summary_frame(reports)
    failed = int((frame['status'] == 'FAIL').sum()) if len(frame) else 0

    story = [Paragraph(title, title_style)]
    if subtitle:
        story.append(Paragraph(subtitle, body_style))
    story.append(Paragraph(f"{len(frame) - failed} passed, {failed} failed", heading_style))
    story.append(Spacer(1, 10))

    header = list(frame.columns)
    page_rows = PDF_CONFIG['max_rows_per_page']
    for start in range(0, max(len(frame), 1), page_rows):
        chunk = frame.iloc[start:start + page_rows]
        rows = [header] + [[str(v) for v in row] for row in chunk.itertuples(index=False)]
        story.append(_check_table(rows, chunk['status'].tolist()))
        if start + page_rows < len(frame):
            story.append(PageBreak())

    doc.build(story)
    return path
