/* mini corpus file f16 */
int f16_value = 16;
